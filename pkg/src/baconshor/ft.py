"""Static fault-tolerance analysis of C^kZ-form circuits: modified
lightcones, the two-row criterion, piece counting, and gate-range metrics.

The modified lightcone of a gate g in timestep t is the union over later
timesteps v of the single-step neighbor sets l_v(supp(g)) -- the qubits
sharing a gate with supp(g) at step v -- not the transitive closure.  That
is the region a CCZ failure can spread Z errors into, and the two-row
criterion (every lightcone meets every block in at most two rows) is the
combinatorial test for Pauli-projective correctability at full distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .circuits import Circuit

CKZ_KINDS = ("CZ", "CCZ", "CkZ")


@dataclass
class LightconeReport:
    gate: tuple  # (timestep, index)
    rows_touched: dict  # block name -> sorted row list
    violates_two_row: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "gate": list(self.gate),
                "rows_touched": {k: list(v) for k, v in self.rows_touched.items()},
                "violates_two_row": self.violates_two_row,
            }
        )


def _check_ckz_form(circuit: Circuit):
    for t, i, g in circuit.gates():
        if g.kind not in CKZ_KINDS:
            raise ValueError(f"not a C^kZ-form circuit: found {g.kind} at step {t}")
        blocks = [circuit.block_of(q) for q in g.qubits]
        if len(set(blocks)) != len(blocks):
            raise ValueError(
                f"gate at ({t},{i}) touches a block twice; circuit is not "
                "partition-respecting"
            )


def _row_of(circuit: Circuit, codes: dict, q: int):
    name = circuit.block_of(q)
    start = circuit.block_map[name][0]
    return name, (q - start) // codes[name].n


def _codes_by_block(circuit: Circuit, codes) -> dict:
    names = sorted(circuit.block_map, key=lambda k: circuit.block_map[k][0])
    if not isinstance(codes, (list, tuple)):
        codes = [codes] * len(names)
    return dict(zip(names, codes))


def modified_lightcone(circuit: Circuit, gate: tuple, codes) -> LightconeReport:
    """Lightcone rows of the gate at (timestep, index) within the circuit."""
    _check_ckz_form(circuit)
    by_block = _codes_by_block(circuit, codes)
    t0, i0 = gate
    g = circuit.timesteps[t0][i0]
    supp = set(g.qubits)
    cone = set()
    for v in range(t0 + 1, circuit.depth):
        for h in circuit.timesteps[v]:
            if supp & set(h.qubits):
                cone |= set(h.qubits)
    rows: dict = {}
    for q in supp | cone:
        name, r = _row_of(circuit, by_block, q)
        rows.setdefault(name, set()).add(r)
    # the gate's own support contributes its row even with an empty cone
    cone_rows: dict = {}
    for q in cone | supp:
        name, r = _row_of(circuit, by_block, q)
        cone_rows.setdefault(name, set()).add(r)
    report = LightconeReport(
        gate=(t0, i0),
        rows_touched={k: sorted(v) for k, v in sorted(cone_rows.items())},
        violates_two_row=any(len(v) > 2 for v in cone_rows.values()),
    )
    return report


def all_lightcones(circuit: Circuit, codes) -> list:
    _check_ckz_form(circuit)
    return [
        modified_lightcone(circuit, (t, i), codes)
        for t, i, _ in circuit.gates()
    ]


def check_two_row_criterion(circuit: Circuit, codes):
    """Return "pass" or the list of violating lightcone reports."""
    violations = [r for r in all_lightcones(circuit, codes) if r.violates_two_row]
    return "pass" if not violations else violations


def piece_count(m: int, n: int, k: int, strategy: str = "plain") -> int:
    """Pieces (segments between intermediate ECs) of the C^kZ gadget."""
    if strategy == "plain":
        return math.ceil(m ** k / n)
    if strategy == "2-transversal":
        return math.ceil(((m + 1) // 2) ** k / n)
    raise ValueError("strategy is 'plain' or '2-transversal'")


def sufficient_asymmetry(m: int, k: int = 2) -> int:
    """n making the 2-transversal construction exist: ceil(m/2)^k."""
    return ((m + 1) // 2) ** k


def necessary_asymmetry(m: int) -> int:
    """n below which no CCZ-form circuit is SPR-correctable: ceil(m^2/4)."""
    return math.ceil(m * m / 4)


@dataclass
class RangeMetrics:
    r_x: int
    r_y: int
    depth: int
    bound_saturated: bool

    def to_json(self) -> str:
        return json.dumps(self.__dict__)


def range_metrics(circuit: Circuit, codes) -> RangeMetrics:
    """Per-gate coordinate spans on the stacked-block geometry.

    Blocks are layered on one another, so a qubit's coordinates are its
    (row, column) inside its own block; gates confined to one column have
    R_x = 0.  For a non-Clifford circuit the constant-depth bound is
    saturated when (R_x+1)(R_y+1) >= d.
    """
    by_block = _codes_by_block(circuit, codes)
    r_x = r_y = 0
    non_clifford = False
    for _, _, g in circuit.gates():
        if g.kind in ("CCZ", "CkZ") and len(g.qubits) >= 3:
            non_clifford = True
        rows, cols = [], []
        for q in g.qubits:
            name = circuit.block_of(q)
            start = circuit.block_map[name][0]
            c = by_block[name]
            rows.append((q - start) // c.n)
            cols.append((q - start) % c.n)
        if len(g.qubits) > 1:
            r_y = max(r_y, max(rows) - min(rows))
            r_x = max(r_x, max(cols) - min(cols))
    d = min(min(c.m, c.n) for c in by_block.values())
    saturated = non_clifford and (r_x + 1) * (r_y + 1) >= d
    return RangeMetrics(r_x, r_y, circuit.depth, saturated)
