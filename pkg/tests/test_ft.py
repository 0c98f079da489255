"""Static fault-tolerance analysis: lightcones, the two-row criterion,
piece counts, range metrics."""

import math

import pytest

from baconshor.circuits import Circuit, GateSpec
from baconshor.code import CodeSpec
from baconshor.ft import (
    check_two_row_criterion,
    modified_lightcone,
    necessary_asymmetry,
    piece_count,
    range_metrics,
    sufficient_asymmetry,
)
from baconshor.gadgets import (
    ccz_3x3,
    ckz_depth_reduced,
    ckz_round_robin,
    two_transversal_ccz,
)


def test_transversal_lightcones_trivial():
    codes = [CodeSpec(3, 9)] * 3
    c = ckz_depth_reduced(3, 9, 2)
    assert c.depth == 1
    for t, i, _ in c.gates():
        r = modified_lightcone(c, (t, i), codes)
        assert all(len(rows) == 1 for rows in r.rows_touched.values())
        assert not r.violates_two_row


def test_ccz_3x3_t0_lightcones():
    codes = [CodeSpec(3, 3)] * 3
    c = ccz_3x3()
    r = modified_lightcone(c, (0, 0), codes)
    # a t=0 gate spreads over every row of block A; B and C stay at two
    assert r.rows_touched["A"] == [0, 1, 2]
    assert len(r.rows_touched["B"]) == 2 and len(r.rows_touched["C"]) == 2
    assert r.violates_two_row
    r2 = modified_lightcone(c, (2, 0), codes)
    assert not r2.violates_two_row


def test_two_row_criterion_results():
    assert check_two_row_criterion(
        ckz_depth_reduced(3, 9, 2), [CodeSpec(3, 9)] * 3) == "pass"
    v = check_two_row_criterion(ccz_3x3(), [CodeSpec(3, 3)] * 3)
    assert v != "pass"
    assert len(v) == 9 and all(r.gate[0] == 0 for r in v)
    assert check_two_row_criterion(
        two_transversal_ccz(3, 4), [CodeSpec(3, 4)] * 3) == "pass"


def test_two_row_criterion_all_two_transversal_m_to_5():
    for m in range(2, 6):
        n = sufficient_asymmetry(m)
        n = max(n, 2)
        c = two_transversal_ccz(m, n)
        assert check_two_row_criterion(c, [CodeSpec(m, n)] * 3) == "pass", m


def test_lightcone_monotone_under_extension():
    codes = [CodeSpec(3, 3)] * 3
    c = ccz_3x3()
    base = {
        (t, i): {
            name: tuple(rows)
            for name, rows in modified_lightcone(c, (t, i), codes).rows_touched.items()
        }
        for t, i, _ in c.gates()
    }
    ext = Circuit(c.n_qubits, [list(s) for s in c.timesteps], dict(c.block_map))
    ext.add_step([GateSpec("CCZ", (0, 9, 18))])
    for (t, i), rows in base.items():
        r2 = modified_lightcone(ext, (t, i), codes)
        for name, rr in rows.items():
            assert set(rr) <= set(r2.rows_touched.get(name, [])), (t, i)


def test_piece_counts():
    assert piece_count(3, 3, 2, "plain") == 3
    assert piece_count(3, 9, 2, "plain") == 1
    assert piece_count(3, 4, 2, "2-transversal") == 1
    for m in range(2, 5):
        for n in range(2, 17):
            for k in range(1, 4):
                assert piece_count(m, n, k, "plain") == math.ceil(m ** k / n)
                assert piece_count(m, n, k, "2-transversal") == math.ceil(
                    ((m + 1) // 2) ** k / n
                )
                # the tradeoff: pieces x n always covers m^k
                assert piece_count(m, n, k, "plain") * n >= m ** k
    with pytest.raises(ValueError):
        piece_count(3, 3, 2, "other")


def test_asymmetry_bounds():
    assert sufficient_asymmetry(3) == 4
    assert necessary_asymmetry(3) == 3  # the checker reports both bounds
    assert sufficient_asymmetry(4) == 4 == necessary_asymmetry(4)


def test_range_metrics():
    codes9 = [CodeSpec(3, 9)] * 3
    rm = range_metrics(ckz_depth_reduced(3, 9, 2), codes9)
    assert rm.r_y == 2 and rm.r_x == 0 and rm.depth == 1
    assert rm.bound_saturated  # (Rx+1)(Ry+1) = 3 >= d = 3
    rm = range_metrics(ckz_round_robin(3, 3, 2), [CodeSpec(3, 3)] * 3)
    assert rm.r_y == 2
    # a transversal CNOT has zero range and is Clifford: not saturated
    c = Circuit(18, block_map={"A": (0, 9), "B": (9, 18)})
    c.add_step(GateSpec("CNOT", (q, 9 + q)) for q in range(9))
    rm = range_metrics(c, [CodeSpec(3, 3)] * 2)
    assert rm.r_x == 0 and rm.r_y == 0 and not rm.bound_saturated


def test_non_ckz_form_rejected():
    c = Circuit(18, block_map={"A": (0, 9), "B": (9, 18)})
    c.add_step([GateSpec("H", (0,))])
    with pytest.raises(ValueError):
        modified_lightcone(c, (0, 0), [CodeSpec(3, 3)] * 2)


def test_report_json():
    codes = [CodeSpec(3, 3)] * 3
    r = modified_lightcone(ccz_3x3(), (0, 0), codes)
    import json

    doc = json.loads(r.to_json())
    assert doc["violates_two_row"] and doc["rows_touched"]["A"] == [0, 1, 2]
    rm = range_metrics(ccz_3x3(), codes)
    assert json.loads(rm.to_json())["r_y"] == 2
