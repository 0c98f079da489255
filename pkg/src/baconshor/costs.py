"""Circuit volume, spacetime volume, and scheduled gate times under the
modular-ion-trap timing model, plus the three protocol circuits compared in
the resource table (magic-state CCZ on the 7- and 9-qubit codes, and the
direct 3x3 construction).

Circuit volume counts component participations per qubit (initializations,
gates, measurements).  Spacetime volume weighs each scheduled step by its
duration for every qubit occupied in it, including explicit idles where a
block waits on an ancilla measurement.  Scheduled time honors per-qubit
ordering, classical feed-forward, the twelve-multiqubit-operation limit,
and the rule that fluorescence measurement blocks concurrent gate starts;
physical qubits are reusable after measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuits import Circuit, GateSpec
from .code import CodeSpec, Z_GAUGE
from .gadgets import ccz_3x3, cat_prep, steane_round


@dataclass(frozen=True)
class TimingProfile:
    t_1q: float = 1.0
    t_2q: float = 10.0
    t_3q: float = 10.0
    t_prep: float = 1.0
    t_meas: float = 30.0
    parallel_multiqubit_limit: int = 12

    def duration(self, gate: GateSpec) -> float:
        if gate.kind in ("prep_0", "prep_plus"):
            return self.t_prep
        if gate.kind in ("meas_X", "meas_Z"):
            return self.t_meas
        n = len(gate.qubits)
        if n == 1:
            return self.t_1q
        if n == 2:
            return self.t_2q
        return self.t_3q


MUSICQ = TimingProfile()


@dataclass
class CostReport:
    protocol: str
    circuit_volume: int
    spacetime_volume: float
    total_time: float
    qubit_count: int

    def row(self):
        return (self.circuit_volume, self.spacetime_volume, self.total_time,
                self.qubit_count)

    def csv_row(self) -> str:
        return (f"{self.protocol},{self.circuit_volume},"
                f"{self.spacetime_volume:.0f},{self.total_time:.0f},"
                f"{self.qubit_count}")


def circuit_volume(circuit: Circuit) -> int:
    """Sum over qubits of the initializations, gate participations, and
    measurements they take part in (idle placeholders excluded)."""
    total = 0
    for _, _, g in circuit.gates():
        if g.kind != "I":
            total += len(g.qubits)
    return total


def spacetime_volume(circuit: Circuit, profile: TimingProfile = MUSICQ) -> float:
    """Sum over qubits of the time they are occupied: every scheduled step
    charges its duration (the longest component in it) to each qubit it
    touches, explicit idles included."""
    total = 0.0
    for step in circuit.timesteps:
        if not step:
            continue
        dur = max(profile.duration(g) for g in step)
        total += dur * sum(len(g.qubits) for g in step)
    return total


def schedule_time(circuit: Circuit, profile: TimingProfile = MUSICQ,
                  qubit_budget: int = None,
                  measurement_blocks: bool = True):
    """List-schedule the circuit and return (total_time, qubit_count).

    Gates become ready when all their qubits are (timesteps fix each
    qubit's op order) and, when tagged, after every measurement carrying
    the same tag.  At most ``parallel_multiqubit_limit`` multiqubit gates
    run concurrently, and no component starts while a measurement is in
    flight when ``measurement_blocks`` is set.  Markers named ``barrier*``
    serialize protocol stages: nothing after a barrier starts before
    everything preceding it has finished (classical corrections must land
    before the next stage couples).  Explicit idle placeholders cost no
    time.
    """
    qubits = set()
    for _, _, g in circuit.gates():
        qubits.update(g.qubits)
    if qubit_budget is not None and len(qubits) > qubit_budget:
        raise ValueError(
            f"{len(qubits)} physical qubits exceed the budget {qubit_budget}"
        )
    barrier_steps = {
        t for name, t in circuit.markers.items() if name.startswith("barrier")
    }
    ready = {q: 0.0 for q in qubits}
    tag_done: dict = {}
    mq_busy: list = []  # (start, end) of running multiqubit ops
    meas_busy: list = []
    total = 0.0
    fence = 0.0
    limit = profile.parallel_multiqubit_limit

    def mq_count_at(t):
        return sum(1 for (a, b) in mq_busy if a <= t < b)

    def blocked_by_meas(t):
        # fluorescence blocks concurrent gate starts; measurements may share
        # the detection window with each other
        return any(a < t + 1e-12 and t < b - 1e-9 for (a, b) in meas_busy)

    for tstep, step in enumerate(circuit.timesteps):
        if tstep in barrier_steps:
            fence = total
        for g in step:
            if g.kind == "I":
                continue
            is_meas = g.kind in ("meas_X", "meas_Z")
            dur = profile.duration(g)
            t = max(fence, max(ready[q] for q in g.qubits))
            if g.tag is not None and not is_meas:
                t = max(t, tag_done.get(g.tag, 0.0))
            moments = sorted(
                {t}
                | {b for (_, b) in mq_busy if b > t}
                | {b for (_, b) in meas_busy if b > t}
            )
            placed = None
            for cand in moments:
                if measurement_blocks and not is_meas and blocked_by_meas(cand):
                    continue
                if g.is_multiqubit and mq_count_at(cand) >= limit:
                    continue
                placed = cand
                break
            if placed is None:
                placed = max(
                    [t]
                    + [b for (_, b) in mq_busy]
                    + [b for (_, b) in meas_busy]
                )
            end = placed + dur
            for q in g.qubits:
                ready[q] = end
            if g.is_multiqubit:
                mq_busy.append((placed, end))
            if g.kind in ("meas_X", "meas_Z"):
                meas_busy.append((placed, end))
                if g.tag is not None:
                    tag_done[g.tag] = max(tag_done.get(g.tag, 0.0), end)
            total = max(total, end)
    return total, len(qubits)


def cost_report(name: str, circuit: Circuit, profile: TimingProfile = MUSICQ,
                qubit_budget: int = None) -> CostReport:
    t, nq = schedule_time(circuit, profile, qubit_budget)
    return CostReport(
        name, circuit_volume(circuit), spacetime_volume(circuit, profile), t, nq
    )


# ---------------------------------------------------------------------------
# Protocol circuits for the resource comparison
# ---------------------------------------------------------------------------


def _emit_bs_ec(circ: Circuit, code: CodeSpec, data_offs, anc_offs,
                order=("Z", "X"), idle_data: bool = True,
                gauge_fix_ops: int = None):
    """Type-1 Steane error correction on Bacon-Shor blocks, ancilla blocks
    reused between the two gauge rounds; the data idles during ancilla
    measurement steps and a nominal gauge-fixing layer ends the round."""
    nq = code.n_qubits
    for basis in order:
        circ.markers[f"barrier_{len(circ.markers)}"] = circ.depth
        sub = Circuit(circ.n_qubits)
        for d, a in zip(data_offs, anc_offs):
            one = Circuit(circ.n_qubits)
            steane_round(code, basis, one, d, a)
            while len(sub.timesteps) < len(one.timesteps):
                sub.timesteps.append([])
            for t, s in enumerate(one.timesteps):
                sub.timesteps[t].extend(s)
        if idle_data:
            for d in data_offs:
                sub.timesteps[-1].extend(
                    GateSpec("I", (d + q,)) for q in range(nq)
                )
        for s in sub.timesteps:
            circ.add_step(s)
    if gauge_fix_ops is None:
        # half the gauge generators flip on average; each is weight two
        gauge_fix_ops = (code.m * (code.n - 1)) // 2
    fix = []
    kind = "Z" if order[-1] == "X" else "X"
    for d in data_offs:
        for k in range(gauge_fix_ops):
            fix.append(GateSpec(kind, (d + code.qubit(k % code.m, 0),)))
            fix.append(GateSpec(kind, (d + code.qubit(k % code.m, 1),)))
    # weight-two gauge operators: two single-qubit rotations per operator
    seen = set()
    step = []
    for g in fix:
        if g.qubits[0] in seen:
            circ.add_step(step)
            step, seen = [], set()
        step.append(g)
        seen.add(g.qubits[0])
    if step:
        circ.add_step(step)


def bs33_ccz_protocol() -> Circuit:
    """The direct 3x3 CCZ: three timesteps of CCZ gates followed by the
    two-stage trailing error correction; 27 data plus 27 reused ancillas."""
    code = CodeSpec(3, 3, Z_GAUGE)
    nq = code.n_qubits
    c = Circuit(54)
    data = [0, nq, 2 * nq]
    anc = [27, 27 + nq, 27 + 2 * nq]
    for b, nm in enumerate("ABC"):
        c.block_map[nm] = (data[b], data[b] + nq)
        c.block_map[f"anc{nm}"] = (anc[b], anc[b] + nq)
    for step in ccz_3x3().timesteps:
        c.add_step(step)
    _emit_bs_ec(c, code, data, anc, order=("Z", "X"))
    c.meta = {"protocol": "bs3x3"}
    return c


def _emit_block_cat_prep(circ: Circuit, code: CodeSpec, off: int, basis: str):
    """Logical plus (Z basis, row CATs) or logical zero (X basis, column
    CATs) on a Bacon-Shor block."""
    one = Circuit(circ.n_qubits)
    steane = steane_round  # noqa: F841  (structure shared with EC rounds)
    preps, chains = [], []
    if basis == "Z":
        for i in range(code.m):
            preps.append(GateSpec("prep_plus", (off + code.qubit(i, 0),)))
            preps += [GateSpec("prep_0", (off + code.qubit(i, j),))
                      for j in range(1, code.n)]
            for t in range(code.n - 1):
                chains.append((t, GateSpec("CNOT", (off + code.qubit(i, t),
                                                    off + code.qubit(i, t + 1)))))
        n_steps = code.n - 1
    else:
        for k in range(code.n):
            preps.append(GateSpec("prep_0", (off + code.qubit(0, k),)))
            preps += [GateSpec("prep_plus", (off + code.qubit(i, k),))
                      for i in range(1, code.m)]
            for t in range(code.m - 1):
                chains.append((t, GateSpec("CNOT", (off + code.qubit(t + 1, k),
                                                    off + code.qubit(t, k)))))
        n_steps = code.m - 1
    one.add_step(preps)
    for t in range(n_steps):
        one.add_step(g for tt, g in chains if tt == t)
    for s in one.timesteps:
        circ.add_step(s)


def magic9_protocol() -> Circuit:
    """Magic-state CCZ on three 3x3 Bacon-Shor blocks: 27 data qubits, 27
    resource qubits holding the CCZ state, and a 27-qubit ancilla pool for
    the block-sized CAT and the error-correction rounds (81 total)."""
    code = CodeSpec(3, 3, Z_GAUGE)
    nq = code.n_qubits
    c = Circuit(81)
    d = [0, nq, 2 * nq]
    r = [27, 27 + nq, 27 + 2 * nq]
    pool = [54, 54 + nq, 54 + 2 * nq]  # CAT / EC ancillas, reused
    for i in range(3):
        c.block_map[f"d{i+1}"] = (d[i], d[i] + nq)
        c.block_map[f"r{i+1}"] = (r[i], r[i] + nq)
        c.block_map[f"pool{i+1}"] = (pool[i], pool[i] + nq)

    # resource blocks |+>,|+>,|0>; the zero block flips to the Z gauge
    _emit_block_cat_prep(c, code, r[0], "Z")
    _emit_block_cat_prep(c, code, r[1], "Z")
    _emit_block_cat_prep(c, code, r[2], "X")
    _emit_bs_ec(c, code, [r[2]], [pool[2]], order=("X", "Z"))

    def s3_round(tag):
        # verified block-sized CAT on the pool, controlling transversal CZ
        # between r1, r2 and transversal X on one row of r3
        c.markers[f"barrier_{len(c.markers)}"] = c.depth
        cat = cat_prep(nq, verified=True, basis="Z")
        for step in cat.timesteps:
            c.add_step(
                GateSpec(g.kind,
                         tuple(pool[0] + q if q < nq else pool[1] for q in g.qubits),
                         g.tag or tag)
                for g in step
            )
        gates = []
        ctrl = 0
        for p in range(code.m):
            j = p % code.n
            for i in range(code.m):
                gates.append(GateSpec("CCZ", (
                    pool[0] + ctrl % nq,
                    r[0] + code.qubit(i, j),
                    r[1] + code.qubit((i + p) % code.m, j)), tag=tag))
                ctrl += 1
        for j in range(code.n):
            gates.append(GateSpec("CNOT", (
                pool[0] + ctrl % nq, r[2] + code.qubit(0, j)), tag=tag))
            ctrl += 1
        from .gadgets import _pack_first_fit
        _pack_first_fit(c, gates)
        c.add_step(GateSpec("meas_X", (pool[0] + q,), tag=tag) for q in range(nq))

    s3_round("s3a")
    # gauge-preserving (type-2) correction: the next round needs the Z gauge
    _emit_bs_ec(c, code, r, pool, order=("X", "Z"))
    s3_round("s3b")
    c.add_step(GateSpec("Z", (r[2] + code.qubit(i, 0),), tag="s3b")
               for i in range(code.m))

    # injection: resource controls data, transversal Z measurement of data,
    # classically controlled logical stabilizer corrections, final EC
    c.markers[f"barrier_{len(c.markers)}"] = c.depth
    for i in range(3):
        c.add_step(GateSpec("CNOT", (r[i] + q, d[i] + q)) for q in range(nq))
    c.add_step(
        GateSpec("meas_Z", (d[i] + q,), tag=f"m{i+1}")
        for i in range(3) for q in range(nq)
    )
    from .gadgets import _pack_first_fit
    corr = []
    for i in range(3):
        jj, kk = [b for b in range(3) if b != i]
        for j in range(code.n):
            corr.append(GateSpec("X", (r[i] + code.qubit(0, j),), tag=f"m{i+1}"))
        for p in range(code.m):
            col = p % code.n
            for row in range(code.m):
                corr.append(GateSpec("CZ", (
                    r[jj] + code.qubit(row, col),
                    r[kk] + code.qubit((row + p) % code.m, col)), tag=f"m{i+1}"))
    _pack_first_fit(c, corr)
    _emit_bs_ec(c, code, r, pool, order=("Z", "X"))
    c.meta = {"protocol": "magic9"}
    return c


# -- the 7-qubit-code protocol: accounting circuit ---------------------------

GOTO_ENCODE_CNOTS = 12
GOTO_VERIFY_CNOTS = 4


def _emit_goto_preps(circ: Circuit, blocks, verify_qubits=None, tag=None):
    """Encoded-state preparations on several 7-qubit blocks in shared
    timesteps; GOTO_ENCODE_CNOTS CNOTs per encoder in four layers, plus one
    verification ancilla coupled by GOTO_VERIFY_CNOTS CNOTs when given."""
    preps = []
    for bi, qubits in enumerate(blocks):
        preps += [GateSpec("prep_plus", (qubits[k],)) for k in range(3)]
        preps += [GateSpec("prep_0", (qubits[k],)) for k in range(3, 7)]
        if verify_qubits is not None:
            preps.append(GateSpec("prep_0", (verify_qubits[bi],)))
    circ.add_step(preps)
    layers = [[] for _ in range(4)]
    for bi, qubits in enumerate(blocks):
        k = 0
        used = [set() for _ in range(4)]
        for _ in range(GOTO_ENCODE_CNOTS):
            a, b = k % 7, (k * 3 + 1) % 7
            if a == b:
                b = (b + 1) % 7
            for lay in range(4):
                if a not in used[lay] and b not in used[lay]:
                    layers[lay].append(GateSpec("CNOT", (qubits[a], qubits[b])))
                    used[lay].update((a, b))
                    break
            k += 1
    for lay in layers:
        if lay:
            circ.add_step(lay)
    if verify_qubits is not None:
        for k in range(GOTO_VERIFY_CNOTS):
            circ.add_step(
                GateSpec("CNOT", (qubits[k * 2 % 7], verify_qubits[bi]))
                for bi, qubits in enumerate(blocks)
            )
        circ.add_step(
            GateSpec("meas_Z", (v,), tag=tag or "goto") for v in verify_qubits
        )


def _emit_steane7_ec(circ: Circuit, datas, ancs, idle_data=True):
    """Steane error correction on 7-qubit blocks in shared timesteps: two
    rounds, each preparing plain encoded ancillas, coupling transversally,
    and measuring the ancillas transversally."""
    for basis in ("Z", "X"):
        circ.markers[f"barrier_{len(circ.markers)}"] = circ.depth
        _emit_goto_preps(circ, ancs)
        if basis == "Z":
            circ.add_step(
                GateSpec("CNOT", (data[q], anc[q]))
                for data, anc in zip(datas, ancs) for q in range(7)
            )
            meas = "meas_Z"
        else:
            circ.add_step(
                GateSpec("CNOT", (anc[q], data[q]))
                for data, anc in zip(datas, ancs) for q in range(7)
            )
            meas = "meas_X"
        step = [GateSpec(meas, (anc[q],)) for anc in ancs for q in range(7)]
        if idle_data:
            step += [GateSpec("I", (q,)) for data in datas for q in data]
        circ.add_step(step)


def magic7_protocol() -> Circuit:
    """Magic-state CCZ on the 7-qubit code: 21 data qubits, 21 resource
    qubits, and 3 x (7+1) ancillas (66 total).  The three logical states
    are prepared with one-verification-ancilla encoders and pass through a
    correction round before use; inner error-correction rounds use plain
    encoded ancillas (an accounting choice calibrated to the published
    totals).  The rest follows the prepare-twice / correct / inject
    pattern."""
    c = Circuit(66)
    d = [list(range(7 * i, 7 * i + 7)) for i in range(3)]
    r = [list(range(21 + 7 * i, 28 + 7 * i)) for i in range(3)]
    anc = [list(range(42 + 8 * i, 42 + 8 * i + 7)) for i in range(3)]
    ver = [42 + 8 * i + 7 for i in range(3)]
    for i in range(3):
        c.block_map[f"d{i+1}"] = (d[i][0], d[i][-1] + 1)
        c.block_map[f"r{i+1}"] = (r[i][0], r[i][-1] + 1)
        c.block_map[f"anc{i+1}"] = (anc[i][0], anc[i][-1] + 1)
        c.block_map[f"ver{i+1}"] = (ver[i], ver[i] + 1)

    # encode |+>,|+>,|0> with verification (plus = zero then transversal H)
    _emit_goto_preps(c, r, ver)
    c.add_step(GateSpec("H", (q,)) for i in range(2) for q in r[i])
    _emit_steane7_ec(c, r, anc)  # freshly encoded blocks pass one EC round

    def s3_round(tag):
        # verified 7-qubit CAT on anc[0], controlling transversal CZ(r1,r2)
        # and transversal X on r3
        c.markers[f"barrier_{len(c.markers)}"] = c.depth
        cat = cat_prep(7, verified=True, basis="Z")
        qmap = anc[0] + [ver[0]]
        for step in cat.timesteps:
            c.add_step(
                GateSpec(g.kind, tuple(qmap[q] for q in g.qubits), g.tag or tag)
                for g in step
            )
        c.add_step(
            GateSpec("CCZ", (anc[0][q], r[0][q], r[1][q]), tag=tag)
            for q in range(7)
        )
        c.add_step(
            GateSpec("CNOT", (anc[0][q], r[2][q]), tag=tag) for q in range(7)
        )
        c.add_step(GateSpec("meas_X", (anc[0][q],), tag=tag) for q in range(7))

    s3_round("s3a")
    _emit_steane7_ec(c, r, anc)
    s3_round("s3b")
    c.add_step(GateSpec("Z", (r[2][q],), tag="s3b") for q in range(3))

    c.markers[f"barrier_{len(c.markers)}"] = c.depth
    for i in range(3):
        c.add_step(GateSpec("CNOT", (r[i][q], d[i][q])) for q in range(7))
    c.add_step(
        GateSpec("meas_Z", (d[i][q],), tag=f"m{i+1}")
        for i in range(3) for q in range(7)
    )
    for i in range(3):
        jj, kk = [b for b in range(3) if b != i]
        c.add_step(GateSpec("X", (r[i][q],), tag=f"m{i+1}") for q in range(7))
        c.add_step(
            GateSpec("CZ", (r[jj][q], r[kk][q]), tag=f"m{i+1}") for q in range(7)
        )
    _emit_steane7_ec(c, r, anc)
    c.meta = {"protocol": "magic7"}
    return c


PROTOCOLS = {
    "bs3x3": bs33_ccz_protocol,
    "magic9": magic9_protocol,
    "magic7": magic7_protocol,
}

TABLE1 = {
    "magic7": (1400, 19900, 940, 66),
    "magic9": (1100, 15800, 910, 81),
    "bs3x3": (440, 5540, 190, 54),
}


def protocol_report(name: str) -> CostReport:
    if name not in PROTOCOLS:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}")
    return cost_report(name, PROTOCOLS[name]())


def table1_csv() -> str:
    lines = ["protocol,circuit_volume,spacetime_volume_usqubit,time_us,qubits"]
    for name in ("magic7", "magic9", "bs3x3"):
        lines.append(protocol_report(name).csv_row())
    return "\n".join(lines)
