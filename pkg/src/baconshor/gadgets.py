"""Builders for the logical-gate gadgets: C^kZ constructions, the 3x3
three-timestep CCZ, Steane error-correction rounds, CAT preparation, the
teleported and transversal Hadamard, magic-state CCZ preparation/injection,
and the logical-action verification oracle.

Multi-block circuits place codeblocks A, B, C, ... on consecutive qubit
ranges; every physical gate of a C^kZ-form circuit touches at most one qubit
per block.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, GateSpec
from .code import CodeSpec, Z_GAUGE, X_GAUGE

BLOCK_NAMES = string.ascii_uppercase


def block_layout(code: CodeSpec, n_blocks: int) -> Circuit:
    nq = code.n_qubits
    c = Circuit(n_blocks * nq)
    for b in range(n_blocks):
        c.block_map[BLOCK_NAMES[b]] = (b * nq, (b + 1) * nq)
    return c


def _pack_first_fit(circuit: Circuit, gates):
    """Greedy first-fit timestep packing on disjoint support."""
    steps: list = []
    supports: list = []
    for g in gates:
        s = set(g.qubits)
        for k, sup in enumerate(supports):
            if not (sup & s):
                steps[k].append(g)
                supports[k] |= s
                break
        else:
            steps.append([g])
            supports.append(s)
    for step in steps:
        circuit.add_step(step)
    return circuit


def _ckz_kind(k: int) -> str:
    return {1: "CZ", 2: "CCZ"}.get(k, "CkZ")


def ckz_round_robin(m: int, n: int, k: int = 2) -> Circuit:
    """Logical C^kZ from one physical C^kZ per (k+1)-tuple of qubits in the
    support of the bare logical Z (column 0) of each block: m^(k+1) gates,
    packed to depth m^k."""
    if k < 1:
        raise ValueError("k >= 1 required")
    code = CodeSpec(m, n, Z_GAUGE)
    c = block_layout(code, k + 1)
    nq = code.n_qubits
    kind = _ckz_kind(k)
    gates = []
    for p in range(m ** k):
        digits = []
        v = p
        for _ in range(k):
            digits.append(v % m)
            v //= m
        for i in range(m):
            qubits = [code.qubit(i, 0)]
            for b, d in enumerate(digits):
                qubits.append((b + 1) * nq + code.qubit((i + d) % m, 0))
            gates.append(GateSpec(kind, tuple(qubits)))
    _pack_first_fit(c, gates)
    c.piece_boundaries = list(range(1, c.depth))
    c.meta = {"gadget": "ckz_round_robin", "m": m, "n": n, "k": k,
              "logical": f"C{k}Z"}
    return c


def ckz_depth_reduced(m: int, n: int, k: int = 2) -> Circuit:
    """Depth-reduced C^kZ: subcircuits C_p indexed by a k-digit m-ary number
    p, placed in column p mod n; every physical gate stays inside one column
    and total depth is ceil(m^k / n)."""
    if n < m:
        raise ValueError("depth reduction requires n >= m")
    code = CodeSpec(m, n, Z_GAUGE)
    c = block_layout(code, k + 1)
    nq = code.n_qubits
    kind = _ckz_kind(k)
    gates = []
    for p in range(m ** k):
        digits = []
        v = p
        for _ in range(k):
            digits.append(v % m)
            v //= m
        j = p % n
        for i in range(m):
            qubits = [code.qubit(i, j)]
            for b, d in enumerate(digits):
                qubits.append((b + 1) * nq + code.qubit((i + d) % m, j))
            gates.append(GateSpec(kind, tuple(qubits)))
    _pack_first_fit(c, gates)
    c.piece_boundaries = list(range(1, c.depth))
    c.meta = {"gadget": "ckz_depth_reduced", "m": m, "n": n, "k": k,
              "logical": f"C{k}Z"}
    return c


def ccz_3x3() -> Circuit:
    """The single-piece 3x3 CCZ: three timesteps of CCZ gates with block
    offsets f(j,t) = j + floor(t/2) and g(j,t) = -j + ceil(t/2), mod 3.

    The construction violates the two-row criterion at t=0 and relies on the
    non-Pauli trailing error-correction; ``meta["special_tec"]`` flags that.
    """
    code = CodeSpec(3, 3, Z_GAUGE)
    c = block_layout(code, 3)
    nq = code.n_qubits
    for t in range(3):
        step = []
        for i in range(3):
            for j in range(3):
                f = (j + t // 2) % 3
                g = (-j + (t + 1) // 2) % 3
                step.append(
                    GateSpec(
                        "CCZ",
                        (
                            code.qubit(i + f, j),
                            nq + code.qubit(i, j),
                            2 * nq + code.qubit(i + g, j),
                        ),
                    )
                )
        c.add_step(step)
    c.meta = {"gadget": "ccz_3x3", "m": 3, "n": 3, "k": 2, "logical": "C2Z",
              "special_tec": True}
    return c


def row_sets(m: int) -> list:
    """Rows partitioned into ceil(m/2) sets of size at most two."""
    return [list(range(2 * a, min(2 * a + 2, m))) for a in range((m + 1) // 2)]


def two_transversal_ccz(m: int, n: int) -> Circuit:
    """2-transversal CCZ: rows paired into ceil(m/2) sets; every triple of
    sets is joined by a <=8-gate round-robin block placed in one column, so
    no modified lightcone meets any block in more than two rows."""
    sets = row_sets(m)
    M = len(sets)
    if n < M * M:
        raise ValueError(f"2-transversal CCZ needs n >= ceil(m/2)^2 = {M * M}")
    code = CodeSpec(m, n, Z_GAUGE)
    c = block_layout(code, 3)
    nq = code.n_qubits
    gates = []
    for p in range(M * M):
        p1, p0 = p // M, p % M
        col = p % n
        for a in range(M):
            sa, sb, sc = sets[a], sets[(a + p1) % M], sets[(a + p0) % M]
            for u in sa:
                for v in sb:
                    for w in sc:
                        gates.append(
                            GateSpec(
                                "CCZ",
                                (
                                    code.qubit(u, col),
                                    nq + code.qubit(v, col),
                                    2 * nq + code.qubit(w, col),
                                ),
                            )
                        )
    _pack_first_fit(c, gates)
    c.meta = {"gadget": "two_transversal_ccz", "m": m, "n": n, "k": 2,
              "logical": "C2Z"}
    return c


# ---------------------------------------------------------------------------
# CAT preparation and Steane error correction
# ---------------------------------------------------------------------------


def cat_prep(size: int, verified: bool = None, basis: str = "Z") -> Circuit:
    """CAT preparation with one postselected verification measurement.

    The Z-basis CAT (|0..0> + |1..1>) uses a chain of CNOTs from one plus
    state; the verification ancilla checks the parity of the two chain
    endpoints and the state is accepted on outcome 0.  Sizes of three or
    less need no verification.
    """
    if size < 2:
        raise ValueError("CAT size >= 2")
    if verified is None:
        verified = size > 3
    nq = size + (1 if verified else 0)
    c = Circuit(nq, block_map={"cat": (0, size)})
    if verified:
        c.block_map["verify"] = (size, size + 1)
    if basis == "Z":
        preps = [GateSpec("prep_plus", (0,))] + [
            GateSpec("prep_0", (q,)) for q in range(1, size)
        ]
        chain = [GateSpec("CNOT", (q, q + 1)) for q in range(size - 1)]
    elif basis == "X":
        preps = [GateSpec("prep_0", (0,))] + [
            GateSpec("prep_plus", (q,)) for q in range(1, size)
        ]
        chain = [GateSpec("CNOT", (q + 1, q)) for q in range(size - 1)]
    else:
        raise ValueError("basis must be Z or X")
    if verified:
        preps.append(GateSpec("prep_0", (size,)))
    c.add_step(preps)
    for g in chain:
        c.add_step([g])
    if verified:
        if basis == "Z":
            c.add_step([GateSpec("CNOT", (0, size))])
            c.add_step([GateSpec("CNOT", (size - 1, size))])
            c.add_step([GateSpec("meas_Z", (size,), tag="verify")])
        else:
            c.add_step([GateSpec("CNOT", (size, 0))])
            c.add_step([GateSpec("CNOT", (size, size - 1))])
            c.add_step([GateSpec("meas_X", (size,), tag="verify")])
    c.meta = {"gadget": "cat_prep", "size": size, "verified": verified,
              "basis": basis}
    return c


def steane_round(code: CodeSpec, basis: str, circuit: Circuit,
                 data_offset: int, anc_offset: int, tag: str = None):
    """Emit one Steane gauge-measurement round into ``circuit``.

    basis "Z": prepare the ancilla block in the Z-gauge logical plus state
    (one Z-basis CAT per row), couple with transversal CNOT data -> ancilla,
    and measure the ancilla transversally in the Z basis; this reads every
    Z-type gauge operator.  basis "X": prepare the X-gauge logical zero (one
    X-basis CAT per column), couple ancilla -> data, and measure in the X
    basis, reading every X-type gauge operator.
    """
    m, n = code.m, code.n
    aq = lambda i, j: anc_offset + code.qubit(i, j)  # noqa: E731
    dq = lambda i, j: data_offset + code.qubit(i, j)  # noqa: E731
    if basis == "Z":
        preps = []
        chains = []  # chains[t] = CNOTs of chain step t
        for i in range(m):
            preps.append(GateSpec("prep_plus", (aq(i, 0),)))
            preps += [GateSpec("prep_0", (aq(i, j),)) for j in range(1, n)]
            for t in range(n - 1):
                chains.append((t, GateSpec("CNOT", (aq(i, t), aq(i, t + 1)))))
        circuit.add_step(preps)
        for t in range(n - 1):
            circuit.add_step(g for tt, g in chains if tt == t)
        circuit.add_step(
            GateSpec("CNOT", (dq(i, j), aq(i, j)))
            for i in range(m)
            for j in range(n)
        )
        circuit.add_step(
            GateSpec("meas_Z", (aq(i, j),), tag=tag)
            for i in range(m)
            for j in range(n)
        )
    elif basis == "X":
        preps = []
        chains = []
        for k in range(n):
            preps.append(GateSpec("prep_0", (aq(0, k),)))
            preps += [GateSpec("prep_plus", (aq(i, k),)) for i in range(1, m)]
            for t in range(m - 1):
                chains.append((t, GateSpec("CNOT", (aq(t + 1, k), aq(t, k)))))
        circuit.add_step(preps)
        for t in range(m - 1):
            circuit.add_step(g for tt, g in chains if tt == t)
        circuit.add_step(
            GateSpec("CNOT", (aq(i, j), dq(i, j)))
            for i in range(m)
            for j in range(n)
        )
        circuit.add_step(
            GateSpec("meas_X", (aq(i, j),), tag=tag)
            for i in range(m)
            for j in range(n)
        )
    else:
        raise ValueError("basis must be Z or X")
    return circuit


def steane_ec(code: CodeSpec, order: int = 1) -> Circuit:
    """Full Steane error correction: both gauge-measurement rounds.

    From the code's current gauge, order 1 measures the currently fixed
    gauge first and flips the block to the other gauge (type-1, yielding
    per-gauge-operator flags); order 2 measures the other gauge first and
    preserves the fixed gauge (type-2).
    """
    if order not in (1, 2):
        raise ValueError("order is 1 (gauge-flipping) or 2 (gauge-preserving)")
    nq = code.n_qubits
    c = Circuit(
        3 * nq,
        block_map={"data": (0, nq), "anc_z": (nq, 2 * nq), "anc_x": (2 * nq, 3 * nq)},
    )
    start = code.gauge if code.gauge in (Z_GAUGE, X_GAUGE) else Z_GAUGE
    first_basis = start if order == 1 else (X_GAUGE if start == Z_GAUGE else Z_GAUGE)
    second_basis = X_GAUGE if first_basis == Z_GAUGE else Z_GAUGE
    for basis in (first_basis, second_basis):
        anc = "anc_z" if basis == "Z" else "anc_x"
        steane_round(code, basis, c, 0, c.block_map[anc][0])
        c.markers[f"round_{basis}_done"] = c.depth
    end_gauge = second_basis if order == 1 else start
    c.meta = {
        "gadget": "steane_ec",
        "order": order,
        "start_gauge": start,
        "end_gauge": end_gauge,
        "round_order": first_basis + second_basis,
    }
    return c


# ---------------------------------------------------------------------------
# Hadamard gadgets
# ---------------------------------------------------------------------------


def transversal_h(code: CodeSpec) -> Circuit:
    """Transversal H on a symmetric block, up to the transpose permutation
    (recorded in meta; relabeling is free on the target architecture)."""
    if code.m != code.n:
        raise ValueError("transversal H needs a symmetric block")
    nq = code.n_qubits
    c = Circuit(nq, block_map={"A": (0, nq)})
    c.add_step(GateSpec("H", (q,)) for q in range(nq))
    perm = [code.qubit(j, i) for i in range(code.m) for j in range(code.n)]
    c.meta = {"gadget": "transversal_h", "logical": "H", "permutation": perm}
    return c


def logical_cz(code: CodeSpec, circuit: Circuit = None, offsets=(0, None)) -> Circuit:
    """Transversal-depth logical CZ between two Z-gauge blocks (the k=1
    column subcircuits; depth ceil(m/n) = 1 whenever n >= m)."""
    nq = code.n_qubits
    if circuit is None:
        circuit = Circuit(2 * nq, block_map={"A": (0, nq), "B": (nq, 2 * nq)})
        offsets = (0, nq)
    off_a, off_b = offsets
    gates = []
    for p in range(code.m):
        j = p % code.n
        for i in range(code.m):
            gates.append(
                GateSpec(
                    "CZ",
                    (off_a + code.qubit(i, j), off_b + code.qubit((i + p) % code.m, j)),
                )
            )
    _pack_first_fit(circuit, gates)
    return circuit


def teleported_h(code: CodeSpec) -> Circuit:
    """H by one-bit teleportation on an asymmetric block: prepare the
    ancilla block in logical plus (Z-gauge), couple with transversal logical
    CZ, measure the target block transversally in the X basis, and apply a
    classically controlled logical X on the ancilla."""
    if code.n <= code.m:
        raise ValueError("teleported H wants an asymmetric block (n > m); "
                         "use transversal_h on symmetric blocks")
    nq = code.n_qubits
    c = Circuit(2 * nq, block_map={"target": (0, nq), "anc": (nq, 2 * nq)})
    # ancilla |+bar_Z>: one Z-basis CAT per row
    preps, chains = [], []
    for i in range(code.m):
        row0 = nq + code.qubit(i, 0)
        preps.append(GateSpec("prep_plus", (row0,)))
        preps += [GateSpec("prep_0", (nq + code.qubit(i, j),)) for j in range(1, code.n)]
        for t in range(code.n - 1):
            chains.append((t, GateSpec("CNOT", (nq + code.qubit(i, t), nq + code.qubit(i, t + 1)))))
    c.add_step(preps)
    for t in range(code.n - 1):
        c.add_step(g for tt, g in chains if tt == t)
    c.markers["ancilla_ready"] = c.depth
    logical_cz(code, c, offsets=(0, nq))
    c.markers["coupled"] = c.depth
    c.add_step(GateSpec("meas_X", (q,), tag="mx") for q in range(nq))
    c.add_step(
        GateSpec("X", (nq + code.qubit(0, j),), tag="mx")
        for j in range(code.n)
    )
    c.meta = {"gadget": "teleported_h", "logical": "H"}
    return c


# ---------------------------------------------------------------------------
# Magic-state CCZ
# ---------------------------------------------------------------------------


def magic_ccz(code: CodeSpec) -> tuple:
    """Magic-state CCZ: (preparation circuit, injection circuit).

    Preparation starts from logical |+>|+>|0> and measures the CCZ-state
    stabilizer X_3 CZ_12 twice with a verified block-sized CAT controlling
    transversal CZ and CNOT, with full error correction between; equal
    parities accept, parity 1 fixes logical Z on the last block.  Injection
    couples the resource blocks to the data with transversal CNOT, measures
    the data blocks in the Z basis, applies classically controlled logical
    stabilizer corrections, and ends in full error correction.
    """
    nq = code.n_qubits
    cat_size = nq

    # ---- preparation ----
    blocks = {}
    off = 0
    for name, size in (
        ("r1", nq), ("r2", nq), ("r3", nq),
        ("cat", cat_size), ("cat_verify", 1),
        ("ec_anc", nq),
    ):
        blocks[name] = (off, off + size)
        off += size
    prep = Circuit(off, block_map=blocks)
    r1, r2, r3 = (blocks[k][0] for k in ("r1", "r2", "r3"))
    cat0 = blocks["cat"][0]
    vq = blocks["cat_verify"][0]
    ec0 = blocks["ec_anc"][0]

    # r1, r2 = |+bar_Z> (row CATs); r3 = |0bar_X> (column CATs)
    preps, chains = [], []
    for base in (r1, r2):
        for i in range(code.m):
            preps.append(GateSpec("prep_plus", (base + code.qubit(i, 0),)))
            preps += [GateSpec("prep_0", (base + code.qubit(i, j),)) for j in range(1, code.n)]
            for t in range(code.n - 1):
                chains.append((t, GateSpec("CNOT", (base + code.qubit(i, t), base + code.qubit(i, t + 1)))))
    for k in range(code.n):
        preps.append(GateSpec("prep_0", (r3 + code.qubit(0, k),)))
        preps += [GateSpec("prep_plus", (r3 + code.qubit(i, k),)) for i in range(1, code.m)]
        for t in range(code.m - 1):
            chains.append((t, GateSpec("CNOT", (r3 + code.qubit(t + 1, k), r3 + code.qubit(t, k)))))
    prep.add_step(preps)
    for t in range(max(code.n, code.m) - 1):
        step = [g for tt, g in chains if tt == t]
        if step:
            prep.add_step(step)
    # r3 to the Z gauge with a type-1 round pair on the shared EC ancilla
    steane_round(code, "X", prep, r3, ec0)
    steane_round(code, "Z", prep, r3, ec0)
    prep.markers["blocks_ready"] = prep.depth

    def s3_measurement(tag):
        cat = cat_prep(cat_size, verified=True, basis="Z")
        for step in cat.timesteps:
            prep.add_step(
                GateSpec(g.kind, tuple(q + cat0 if q < cat_size else vq for q in g.qubits), g.tag or tag)
                for g in step
            )
        # CAT-controlled logical CZ(r1, r2): each physical CZ gains a CAT control
        ctrl = 0
        ccz_gates = []
        for p in range(code.m):
            j = p % code.n
            for i in range(code.m):
                ccz_gates.append(
                    GateSpec(
                        "CCZ",
                        (
                            cat0 + ctrl % cat_size,
                            r1 + code.qubit(i, j),
                            r2 + code.qubit((i + p) % code.m, j),
                        ),
                        tag=tag,
                    )
                )
                ctrl += 1
        _pack_first_fit(prep, ccz_gates)
        # CAT-controlled logical X on r3 (one row of CNOTs)
        cnots = []
        for j in range(code.n):
            cnots.append(
                GateSpec("CNOT", (cat0 + ctrl % cat_size, r3 + code.qubit(0, j)), tag=tag)
            )
            ctrl += 1
        _pack_first_fit(prep, cnots)
        prep.add_step(
            GateSpec("meas_X", (cat0 + q,), tag=tag) for q in range(cat_size)
        )

    s3_measurement("s3_first")
    for base in (r1, r2, r3):
        steane_round(code, "Z", prep, base, ec0)
        steane_round(code, "X", prep, base, ec0)
    prep.markers["mid_ec_done"] = prep.depth
    s3_measurement("s3_second")
    prep.add_step(
        GateSpec("Z", (r3 + code.qubit(i, 0),), tag="fix_parity_1")
        for i in range(code.m)
    )
    prep.meta = {"gadget": "magic_ccz_prep", "accept": "equal parities",
                 "logical": "prepare |CCZ>"}

    # ---- injection ----
    blocks = {}
    off = 0
    for name in ("d1", "d2", "d3", "r1", "r2", "r3"):
        blocks[name] = (off, off + nq)
        off += nq
    blocks["ec_anc"] = (off, off + nq)
    off += nq
    inject = Circuit(off, block_map=blocks)
    d = [blocks[f"d{i+1}"][0] for i in range(3)]
    r = [blocks[f"r{i+1}"][0] for i in range(3)]
    for i in range(3):
        inject.add_step(
            GateSpec("CNOT", (r[i] + q, d[i] + q)) for q in range(nq)
        )
    for i in range(3):
        inject.add_step(
            GateSpec("meas_Z", (d[i] + q,), tag=f"m{i+1}") for q in range(nq)
        )
    # classically controlled S_i = X_i CZ_jk corrections
    for i in range(3):
        jj, kk = [b for b in range(3) if b != i]
        inject.add_step(
            GateSpec("X", (r[i] + code.qubit(0, j),), tag=f"m{i+1}")
            for j in range(code.n)
        )
        cz = []
        for p in range(code.m):
            col = p % code.n
            for row in range(code.m):
                cz.append(
                    GateSpec(
                        "CZ",
                        (r[jj] + code.qubit(row, col), r[kk] + code.qubit((row + p) % code.m, col)),
                        tag=f"m{i+1}",
                    )
                )
        _pack_first_fit(inject, cz)
    inject.markers["corrections_done"] = inject.depth
    for i in range(3):
        steane_round(code, "Z", inject, r[i], blocks["ec_anc"][0])
        steane_round(code, "X", inject, r[i], blocks["ec_anc"][0])
    inject.meta = {"gadget": "magic_ccz_inject", "logical": "CCZ via |CCZ>"}
    return prep, inject


# ---------------------------------------------------------------------------
# Logical-action verification oracle
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    ok: bool
    checked: int = 0
    failures: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


class _DiagPoly:
    """Diagonal operator as a GF(2) set of monomials over qubit indices.

    The operator is (-1)^{sum over monomials of prod of bits}; the empty
    monomial is a global sign.  Exactly what conjugating X strings through
    C^kZ-form circuits produces.
    """

    __slots__ = ("monos",)

    def __init__(self):
        self.monos = set()

    def toggle(self, mono: frozenset):
        if mono in self.monos:
            self.monos.remove(mono)
        else:
            self.monos.add(mono)

    def absorb_gate_conjugation(self, support: tuple, xmask: int):
        """Multiply in g X(s) g / X(s) for a C^kZ gate g over ``support``."""
        hit = [q for q in support if (xmask >> q) & 1]
        if not hit:
            return
        rest = [q for q in support if not (xmask >> q) & 1]
        for r in range(1 << len(hit)):
            if r == (1 << len(hit)) - 1:
                continue
            mono = frozenset(rest + [hit[i] for i in range(len(hit)) if (r >> i) & 1])
            self.toggle(mono)

    def eval_table(self, row_of, n_rows: int) -> np.ndarray:
        """Signs on every row-bit assignment; ``row_of`` maps qubit to row."""
        assigns = np.arange(1 << n_rows, dtype=np.int64)
        total = np.zeros(1 << n_rows, dtype=np.int64)
        for mono in self.monos:
            if not mono:
                total += 1
                continue
            rows = {row_of(q) for q in mono}
            prod = np.ones(1 << n_rows, dtype=np.int64)
            for rr in rows:
                prod &= (assigns >> rr) & 1
            total += prod
        return 1 - 2 * (total % 2)


def _expected_phase_table(gate_label: str, n_blocks: int, block_parities,
                          acting_block: int):
    """Phase of (logical gate) X_b (gate)^dag / X_b on each assignment."""
    if gate_label in ("I", "identity"):
        return np.ones_like(block_parities[0])
    if gate_label.startswith("C") and gate_label.endswith("Z"):
        out = np.ones_like(block_parities[0])
        prod = np.ones_like(block_parities[0])
        for b in range(n_blocks):
            if b != acting_block:
                prod = prod & block_parities[b]
        return 1 - 2 * prod
    raise ValueError(f"no phase oracle for logical gate {gate_label!r}")


def verify_logical_action(circuit: Circuit, codes, expected: str) -> VerificationReport:
    """Check a C^kZ-form (or empty) circuit implements the expected logical
    gate, by conjugating the bare logical X of every block and every X-type
    stabilizer generator through the circuit and evaluating the induced
    diagonal on all row-bit assignments of the Z-gauge codespace.

    X strings map to themselves through diagonal circuits, so the check
    reduces to comparing phase functions; stabilizer generators must come
    back with a codespace-trivial diagonal, i.e. land in the
    stabilizer-plus-fixed-gauge group.
    """
    if isinstance(codes, CodeSpec):
        codes = [codes]
    names = sorted(circuit.block_map, key=lambda k: circuit.block_map[k][0])
    if len(names) != len(codes):
        raise ValueError("one code per block required")
    offsets = [circuit.block_map[nm][0] for nm in names]
    for _, _, g in circuit.gates():
        if g.kind not in ("Z", "CZ", "CCZ", "CkZ"):
            raise ValueError(
                f"verification oracle covers diagonal circuits only, found {g.kind}"
            )

    # global row index of a qubit
    row_base = []
    acc = 0
    for c in codes:
        row_base.append(acc)
        acc += c.m
    n_rows = acc

    def row_of(q):
        for b in range(len(codes) - 1, -1, -1):
            if q >= offsets[b]:
                return row_base[b] + (q - offsets[b]) // codes[b].n
        raise ValueError(q)

    assigns = np.arange(1 << n_rows, dtype=np.int64)
    parities = []
    for b, c in enumerate(codes):
        par = np.zeros(1 << n_rows, dtype=np.int64)
        for i in range(c.m):
            par ^= (assigns >> (row_base[b] + i)) & 1
        parities.append(par)

    report = VerificationReport(ok=True)

    def conjugated_diag(xmask):
        d = _DiagPoly()
        for _, _, g in circuit.gates():
            d.absorb_gate_conjugation(g.qubits, xmask)
        return d

    # bare logical X of each block: one row of X
    for b, c in enumerate(codes):
        for i in range(c.m):
            xmask = 0
            for j in range(c.n):
                xmask |= 1 << (offsets[b] + c.qubit(i, j))
            got = conjugated_diag(xmask).eval_table(row_of, n_rows)
            want = _expected_phase_table(expected, len(codes), parities, b)
            report.checked += 1
            if not np.array_equal(got, want):
                report.ok = False
                report.failures.append(
                    f"logical X on block {names[b]} row {i}: induced phase "
                    f"function differs from {expected} on "
                    f"{int(np.sum(got != want))} assignments"
                )

    # X-type stabilizer generators must return codespace-trivial diagonals
    for b, c in enumerate(codes):
        for i in range(1, c.m):
            xmask = 0
            for j in range(c.n):
                xmask |= 1 << (offsets[b] + c.qubit(i - 1, j))
                xmask |= 1 << (offsets[b] + c.qubit(i, j))
            got = conjugated_diag(xmask).eval_table(row_of, n_rows)
            report.checked += 1
            if not np.all(got == 1):
                report.ok = False
                report.failures.append(
                    f"X stabilizer rows {i-1},{i} of block {names[b]} leaves "
                    "the stabilizer-plus-gauge group"
                )
    return report


def delete_gate(circuit: Circuit, t: int, idx: int) -> Circuit:
    """Copy of the circuit with one gate removed (mutation testing)."""
    out = Circuit(circuit.n_qubits, block_map=dict(circuit.block_map))
    out.markers = dict(circuit.markers)
    out.piece_boundaries = list(circuit.piece_boundaries)
    out.meta = dict(circuit.meta)
    for tt, step in enumerate(circuit.timesteps):
        gates = [g for i, g in enumerate(step) if not (tt == t and i == idx)]
        out.timesteps.append(gates)
    return out
