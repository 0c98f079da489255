"""The m x n Bacon-Shor subsystem code: operator groups, syndromes, error
classification, codespace phase evaluation, and code extension.

Qubits sit on an m x n lattice, linearized row-major: (i, j) -> i*n + j.
Stabilizer generators are adjacent column pairs of Z and adjacent row pairs
of X; gauge generators are the 2-local horizontal ZZ and vertical XX pairs.
The lowest-weight bare logicals are one column of Z and one row of X, so the
distance is min(m, n).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

from .circuits import Circuit, GateSpec
from .pauli import (
    DiagonalCliffordFrame,
    GroupReducer,
    PauliString,
    commutes,
    multiply,
)

Z_GAUGE = "Z"
X_GAUGE = "X"
UNFIXED = "unfixed"


@dataclass(frozen=True)
class CodeSpec:
    m: int
    n: int
    gauge: str = Z_GAUGE

    def __post_init__(self):
        if self.m < 2 or self.n < 2:
            raise ValueError("Bacon-Shor codes need m >= 2 and n >= 2")
        if self.gauge not in (Z_GAUGE, X_GAUGE, UNFIXED):
            raise ValueError(f"unknown gauge {self.gauge!r}")

    @property
    def n_qubits(self) -> int:
        return self.m * self.n

    @property
    def distance(self) -> int:
        return min(self.m, self.n)

    @property
    def n_stabilizers(self) -> int:
        return (self.m - 1) + (self.n - 1)

    def qubit(self, i: int, j: int) -> int:
        return (i % self.m) * self.n + (j % self.n)

    def coords(self, q: int) -> tuple:
        return divmod(q, self.n)

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "n": self.n, "gauge": self.gauge})

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        d = json.loads(text)
        return cls(d["m"], d["n"], d.get("gauge", Z_GAUGE))


@dataclass(frozen=True)
class OperatorGroups:
    stabilizer_gens: tuple  # Z~_j for j in (n), then X~_i for i in (m)
    z_stabilizer_gens: tuple
    x_stabilizer_gens: tuple
    z_gauge_gens: tuple  # Zbar_{i,j}, i in [m), j in (n)
    x_gauge_gens: tuple  # Xbar_{h,k}, h in (m), k in [n)
    logical_z: PauliString
    logical_x: PauliString


def _mask(code: CodeSpec, coords) -> int:
    v = 0
    for (i, j) in coords:
        v |= 1 << code.qubit(i, j)
    return v


def column_z(code: CodeSpec, j: int) -> PauliString:
    return PauliString(code.n_qubits, 0, _mask(code, ((i, j) for i in range(code.m))))


def row_x(code: CodeSpec, i: int) -> PauliString:
    return PauliString(code.n_qubits, _mask(code, ((i, j) for j in range(code.n))), 0)


def build(m: int, n: int, gauge: str = Z_GAUGE) -> tuple:
    """Construct the code and its operator groups."""
    code = CodeSpec(m, n, gauge)
    nq = code.n_qubits
    z_stabs = tuple(
        multiply(column_z(code, j - 1), column_z(code, j)) for j in range(1, n)
    )
    x_stabs = tuple(
        multiply(row_x(code, i - 1), row_x(code, i)) for i in range(1, m)
    )
    z_gauge = tuple(
        PauliString(nq, 0, _mask(code, [(i, j - 1), (i, j)]))
        for i in range(m)
        for j in range(1, n)
    )
    x_gauge = tuple(
        PauliString(nq, _mask(code, [(h - 1, k), (h, k)]), 0)
        for h in range(1, m)
        for k in range(n)
    )
    groups = OperatorGroups(
        stabilizer_gens=z_stabs + x_stabs,
        z_stabilizer_gens=z_stabs,
        x_stabilizer_gens=x_stabs,
        z_gauge_gens=z_gauge,
        x_gauge_gens=x_gauge,
        logical_z=column_z(code, 0),
        logical_x=row_x(code, 0),
    )
    return code, groups


@lru_cache(maxsize=None)
def _cached(m, n, gauge):
    return build(m, n, gauge)


def groups_of(code: CodeSpec) -> OperatorGroups:
    return _cached(code.m, code.n, code.gauge)[1]


@dataclass(frozen=True)
class Syndrome:
    """Commutation flags against the generator sets.

    ``z_stab_bits``: one bit per column stabilizer Z~_j (set iff the error
    anticommutes); ``x_stab_bits``: per row stabilizer X~_i; ``gauge_bits``:
    per measured gauge generator, present only for type-1 rounds.
    """

    z_stab_bits: int
    x_stab_bits: int
    gauge_bits: int = 0
    gauge_kind: str = ""


def syndrome_of(code: CodeSpec, e: PauliString, round_type: int = 2,
                starting_gauge: str = Z_GAUGE) -> Syndrome:
    """Flags of an error against stabilizers, plus type-1 gauge information.

    Type-1 correction starting from the Z-gauge measures every Zbar_{i,j}
    (and from the X-gauge every Xbar_{h,k}); the extra flags land in
    ``gauge_bits``.
    """
    g = groups_of(code)
    if e.n != code.n_qubits:
        raise ValueError("error sized to a different code")
    zbits = 0
    for k, s in enumerate(g.z_stabilizer_gens):
        if not commutes(e, s):
            zbits |= 1 << k
    xbits = 0
    for k, s in enumerate(g.x_stabilizer_gens):
        if not commutes(e, s):
            xbits |= 1 << k
    gauge_bits = 0
    gauge_kind = ""
    if round_type == 1:
        gens = g.z_gauge_gens if starting_gauge == Z_GAUGE else g.x_gauge_gens
        gauge_kind = "Z" if starting_gauge == Z_GAUGE else "X"
        for k, s in enumerate(gens):
            if not commutes(e, s):
                gauge_bits |= 1 << k
    return Syndrome(zbits, xbits, gauge_bits, gauge_kind)


IDENTITY_COSET = "identity-coset"
GAUGE_ONLY = "gauge-only"
LOGICAL_X = "logical-X"
LOGICAL_Z = "logical-Z"
LOGICAL_Y = "logical-Y"
DETECTABLE = "detectable"


@lru_cache(maxsize=None)
def _stab_reducer(m, n):
    code, g = _cached(m, n, Z_GAUGE)
    return GroupReducer(code.n_qubits, g.stabilizer_gens)


@lru_cache(maxsize=None)
def _stab_gauge_reducer(m, n):
    code, g = _cached(m, n, Z_GAUGE)
    return GroupReducer(
        code.n_qubits, g.stabilizer_gens + g.z_gauge_gens + g.x_gauge_gens
    )


def classify(code: CodeSpec, e: PauliString) -> str:
    """Coset of an undetected error; ``detectable`` if any stabilizer flags."""
    g = groups_of(code)
    s = syndrome_of(code, e)
    if s.z_stab_bits or s.x_stab_bits:
        return DETECTABLE
    anti_lz = not commutes(e, g.logical_z)  # X-type logical content
    anti_lx = not commutes(e, g.logical_x)  # Z-type logical content
    if anti_lz and anti_lx:
        return LOGICAL_Y
    if anti_lz:
        return LOGICAL_X
    if anti_lx:
        return LOGICAL_Z
    if _stab_reducer(code.m, code.n).contains(e):
        return IDENTITY_COSET
    return GAUGE_ONLY


def codespace_phase_eval(d: DiagonalCliffordFrame, row_bits, code: CodeSpec = None,
                         layout=None) -> complex:
    """Eigenvalue of a diagonal operator on a row-constant basis state.

    In the Z-gauge the codespace is spanned by states where every qubit in
    row i of a block carries that row's bit.  ``row_bits`` is a sequence of
    per-row bits; for multi-block operators pass ``layout``, a function
    mapping a global qubit index to its row index into ``row_bits``.
    """
    if d.x != 0:
        raise ValueError("operator is not diagonal (X part present)")
    if layout is None:
        if code is None:
            raise ValueError("pass a code or an explicit layout")
        layout = lambda q: q // code.n  # noqa: E731
    val = 1j ** d.phase
    z = d.z
    q = 0
    while z:
        if z & 1 and row_bits[layout(q)]:
            val = -val
        z >>= 1
        q += 1
    for (a, b) in d.cz:
        if row_bits[layout(a)] and row_bits[layout(b)]:
            val = -val
    return val


def extension_circuit(code_from: CodeSpec, code_to: CodeSpec) -> Circuit:
    """Grow (or shrink) a codeblock fault-tolerantly.

    Row extension: prepare an (m'-m) x n ancilla block in the Z-gauge logical
    plus state (one CAT per row) and join it by measuring the Z-gauge across
    the boundary with one full-size Steane round on the joined block.  Column
    removal: measure the dropped columns qubit-by-qubit in the X basis.
    """
    from .gadgets import steane_round  # local import: gadgets builds on code

    if code_from.m == code_to.m and code_from.n == code_to.n:
        c = Circuit(code_from.n_qubits, block_map={"data": (0, code_from.n_qubits)})
        return c

    if code_to.n == code_from.n and code_to.m > code_from.m:
        m_new, n = code_to.m - code_from.m, code_from.n
        total = code_to.m * n
        c = Circuit(
            2 * total,
            block_map={"data": (0, total), "anc": (total, 2 * total)},
        )
        base = code_from.n_qubits  # new rows appended below the old block
        preps, c1, c2 = [], [], []
        for r in range(m_new):
            row0 = base + r * n
            preps.append(GateSpec("prep_plus", (row0,)))
            preps += [GateSpec("prep_0", (row0 + j,)) for j in range(1, n)]
            c1 += [GateSpec("CNOT", (row0, row0 + j)) for j in range(1, n) if j == 1]
            c2 += [GateSpec("CNOT", (row0, row0 + j)) for j in range(2, n)]
        c.add_step(preps)
        if c1:
            c.add_step(c1)
        for g in c2:
            c.add_step([g])
        c.markers["ancilla_ready"] = c.depth
        joined = CodeSpec(code_to.m, code_to.n, Z_GAUGE)
        steane_round(joined, "Z", c, data_offset=0, anc_offset=total)
        steane_round(joined, "X", c, data_offset=0, anc_offset=total)
        c.markers["join_round"] = c.depth
        return c

    if code_to.m == code_from.m and code_to.n < code_from.n:
        c = Circuit(
            code_from.n_qubits, block_map={"data": (0, code_from.n_qubits)}
        )
        drop = [
            GateSpec("meas_X", (code_from.qubit(i, j),))
            for i in range(code_from.m)
            for j in range(code_to.n, code_from.n)
        ]
        c.add_step(drop)
        c.markers["columns_removed"] = c.depth
        return c

    raise ValueError(f"incompatible shapes {code_from} -> {code_to}")
