"""Cost metrics and the MUSICQ-style scheduler."""

import pytest

from baconshor.circuits import Circuit, GateSpec
from baconshor.costs import (
    MUSICQ,
    TimingProfile,
    circuit_volume,
    cost_report,
    protocol_report,
    schedule_time,
    spacetime_volume,
    table1_csv,
    TABLE1,
)


def _single(kind, qubits, n):
    c = Circuit(n)
    c.add_step([GateSpec(kind, qubits)])
    return c


def test_circuit_volume_examples():
    assert circuit_volume(_single("CNOT", (0, 1), 2)) == 2
    assert circuit_volume(Circuit(3)) == 0
    c = Circuit(3)
    c.add_step([GateSpec("prep_0", (0,))])
    c.add_step([GateSpec("CCZ", (0, 1, 2))])
    c.add_step([GateSpec("meas_Z", (0,))])
    assert circuit_volume(c) == 1 + 3 + 1


def test_circuit_volume_additive_under_concat():
    a = Circuit(2, block_map={"A": (0, 2)})
    a.add_step([GateSpec("CNOT", (0, 1))])
    b = Circuit(2, block_map={"A": (0, 2)})
    b.add_step([GateSpec("H", (0,))])
    b.add_step([GateSpec("meas_Z", (1,))])
    assert circuit_volume(a.concat(b)) == circuit_volume(a) + circuit_volume(b)


def test_spacetime_examples():
    assert spacetime_volume(_single("meas_Z", (0,), 1)) == 30.0
    assert spacetime_volume(_single("CNOT", (0, 1), 2)) == 20.0
    # idles in a measurement step are charged the step duration
    c = Circuit(2)
    c.add_step([GateSpec("meas_Z", (0,)), GateSpec("I", (1,))])
    assert spacetime_volume(c) == 60.0


def test_schedule_time_simple():
    c = Circuit(20, block_map={"A": (0, 9), "B": (9, 18)})
    c.add_step(GateSpec("CNOT", (q, 9 + q)) for q in range(9))
    t, nq = schedule_time(c)
    assert t == 10.0 and nq == 18  # nine CNOTs fit under the limit of 12


def test_schedule_parallel_limit_monotone():
    c = Circuit(40)
    c.add_step(GateSpec("CNOT", (2 * k, 2 * k + 1)) for k in range(20))
    times = []
    for limit in (1, 4, 12, 20, 100):
        prof = TimingProfile(parallel_multiqubit_limit=limit)
        t, _ = schedule_time(c, prof)
        times.append(t)
    assert times == sorted(times, reverse=True)
    assert times[0] == 200.0 and times[-1] == 10.0


def test_schedule_critical_path_unlimited():
    prof = TimingProfile(parallel_multiqubit_limit=10 ** 6)
    c = Circuit(4)
    c.add_step([GateSpec("CNOT", (0, 1)), GateSpec("CNOT", (2, 3))])
    c.add_step([GateSpec("CNOT", (1, 2))])
    c.add_step([GateSpec("H", (0,))])
    t, _ = schedule_time(c, prof, measurement_blocks=False)
    # the 0-1 -> 1-2 chain dominates; H starts at 10 and finishes inside it
    assert t == 20.0


def test_measurement_blocking():
    c = Circuit(3)
    c.add_step([GateSpec("meas_Z", (0,))])
    c.add_step([GateSpec("H", (1,))])
    t_block, _ = schedule_time(c, measurement_blocks=True)
    t_free, _ = schedule_time(c, measurement_blocks=False)
    assert t_block == 31.0 and t_free == 30.0


def test_feed_forward_tags():
    c = Circuit(2)
    c.add_step([GateSpec("meas_Z", (0,), tag="m")])
    c.add_step([GateSpec("X", (1,), tag="m")])
    t, _ = schedule_time(c, measurement_blocks=False)
    assert t == 31.0  # the correction waits for its measurement


def test_qubit_budget():
    c = _single("CNOT", (0, 1), 2)
    schedule_time(c, qubit_budget=2)
    with pytest.raises(ValueError):
        schedule_time(c, qubit_budget=1)


def test_table1_bands():
    for name, (cv, st, tt, nq) in TABLE1.items():
        r = protocol_report(name)
        assert r.qubit_count == nq, name
        assert abs(r.circuit_volume - cv) <= 0.15 * cv, (name, r.circuit_volume)
        assert abs(r.spacetime_volume - st) <= 0.15 * st, (name, r.spacetime_volume)
        assert abs(r.total_time - tt) <= 0.15 * tt, (name, r.total_time)


def test_table1_csv_shape():
    text = table1_csv()
    lines = text.strip().splitlines()
    assert lines[0].startswith("protocol,circuit_volume")
    assert len(lines) == 4


def test_unknown_protocol():
    with pytest.raises(ValueError):
        protocol_report("magic8")


def test_cost_report_empty_circuit():
    r = cost_report("empty", Circuit(3))
    assert r.circuit_volume == 0 and r.spacetime_volume == 0
    assert r.total_time == 0 and r.qubit_count == 0
