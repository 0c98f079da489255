"""Circuit depolarizing noise, fault enumeration, minimum-weight lookup
decoding with gauge fixing, and the non-Pauli CCZ trailing-EC decoder.

A q-qubit gate fails with its class probability and then applies one of the
4^q - 1 non-identity Paulis on its support, each with weight p_g/(4^q - 1).
Initialization and measurement fail only through the damaging Pauli (X for
a Z-basis preparation or readout, Z for the X basis) with weights p_i and
p_m.  All components fail independently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .circuits import Circuit, GateSpec
from .code import CodeSpec, Z_GAUGE, X_GAUGE, groups_of
from .pauli import (
    DiagonalCliffordFrame,
    PauliString,
    frame_inverse,
    frame_multiply,
    conjugate,
)


@dataclass(frozen=True)
class NoiseModel:
    p_ccz: float = 0.0
    p_cnot: float = 0.0
    p_1q: float = 0.0
    p_i: float = 0.0
    p_m: float = 0.0

    def __post_init__(self):
        for f in ("p_ccz", "p_cnot", "p_1q", "p_i", "p_m"):
            v = getattr(self, f)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{f}={v} outside [0, 1]")

    @classmethod
    def uniform(cls, p: float) -> "NoiseModel":
        return cls(p, p, p, p, p)

    @classmethod
    def scaled(cls, p: float) -> "NoiseModel":
        """q-qubit components err with probability p/10^(2-q), in CNOT units:
        CCZ at 10p, CNOT and CZ at p, everything 1-qubit at p/10."""
        return cls(10 * p, p, p / 10, p / 10, p / 10)

    def rate(self, cls_name: str) -> float:
        return {
            "ccz": self.p_ccz,
            "cnot": self.p_cnot,
            "1q": self.p_1q,
            "prep": self.p_i,
            "meas": self.p_m,
        }[cls_name]

    def to_json(self) -> str:
        return json.dumps(
            {"p_ccz": self.p_ccz, "p_cnot": self.p_cnot, "p_1q": self.p_1q,
             "p_i": self.p_i, "p_m": self.p_m}
        )

    @classmethod
    def from_json(cls, text: str) -> "NoiseModel":
        d = json.loads(text)
        return cls(d["p_ccz"], d["p_cnot"], d["p_1q"], d["p_i"], d["p_m"])


NOISE_CLASSES = ("ccz", "cnot", "1q", "prep", "meas")


def noise_class(gate: GateSpec) -> str:
    if gate.kind in ("CCZ", "CkZ"):
        return "ccz"
    if gate.kind in ("CNOT", "CZ"):
        return "cnot"
    if gate.kind in ("I", "H", "X", "Z"):
        return "1q"
    if gate.kind in ("prep_0", "prep_plus"):
        return "prep"
    if gate.kind in ("meas_Z", "meas_X"):
        return "meas"
    raise ValueError(gate.kind)


@dataclass(frozen=True)
class FaultEvent:
    location: tuple  # (timestep, gate index)
    error: PauliString  # over the gate's support qubits, in gate order
    probability_weight: float
    noise_cls: str = ""

    def __post_init__(self):
        if self.error.is_identity():
            raise ValueError("fault events carry nontrivial errors")


def _support_paulis(arity: int):
    out = []
    for combo in product("IXZY", repeat=arity):
        if all(c == "I" for c in combo):
            continue
        out.append(PauliString.from_label("".join(combo)))
    return out


def fault_paulis(gate: GateSpec):
    """The damaging Paulis of one component, over its support."""
    if gate.kind in ("prep_0", "meas_Z"):
        return [PauliString.from_label("X")]
    if gate.kind in ("prep_plus", "meas_X"):
        return [PauliString.from_label("Z")]
    return _support_paulis(len(gate.qubits))


def enumerate_faults(circuit: Circuit, model: NoiseModel):
    """One FaultEvent per (location, nontrivial damaging Pauli) pair."""
    events = []
    for t, i, g in circuit.gates():
        cls = noise_class(g)
        rate = model.rate(cls)
        paulis = fault_paulis(g)
        w = rate / len(paulis)
        for p in paulis:
            events.append(FaultEvent((t, i), p, w, cls))
    return events


# ---------------------------------------------------------------------------
# Lookup decoding
# ---------------------------------------------------------------------------


def _masks_by_weight(nq: int):
    return sorted(
        range(1 << nq),
        key=lambda v: (bin(v).count("1"), tuple(q for q in range(nq) if (v >> q) & 1)),
    )


@dataclass
class DecoderTable:
    """Minimum-weight lookup decoder for one type-1 Steane round pair.

    ``round_type`` is "from_z" (Z-gauge measured first, then the X
    stabilizers; corrects X errors exactly and Z errors modulo the Z gauge)
    or "from_x" (the mirror).  ``x_recovery``/``z_recovery`` map syndrome
    bits to recovery masks; ``gauge_fix`` maps the final gauge-outcome bits
    to the gauge-group element restoring the +1 eigenspace.
    """

    code: CodeSpec
    round_type: str
    x_recovery: dict  # gauge-flag bits -> X mask
    z_recovery: dict  # stabilizer bits -> Z mask
    gauge_fix: dict  # final gauge outcome bits -> (x_mask, z_mask) gauge op

    def recovery(self, gauge_bits: int, stab_bits: int) -> PauliString:
        if self.round_type == "from_z":
            x = self.x_recovery[gauge_bits]
            z = self.z_recovery[stab_bits]
        else:
            z = self.z_recovery[gauge_bits]
            x = self.x_recovery[stab_bits]
        # recovery is a bare X(x) then Z(z) product; phase-free Hermitian form
        p = PauliString(self.code.n_qubits, x, z, bin(x & z).count("1"))
        return p

    def export_json(self) -> str:
        return json.dumps(
            {
                "code": {"m": self.code.m, "n": self.code.n},
                "round_type": self.round_type,
                "x_recovery": {str(k): v for k, v in self.x_recovery.items()},
                "z_recovery": {str(k): v for k, v in self.z_recovery.items()},
                "gauge_fix": {
                    str(k): list(v) for k, v in self.gauge_fix.items()
                },
            },
            indent=1,
        )


def _flag_bits(mask: int, gen_masks) -> int:
    bits = 0
    for k, gm in enumerate(gen_masks):
        if bin(mask & gm).count("1") & 1:
            bits |= 1 << k
    return bits


@lru_cache(maxsize=None)
def build_decoder_table(code: CodeSpec, round_type: str) -> DecoderTable:
    """Exhaustive min-weight table for m, n <= 4 (ties break to the
    lexicographically smallest qubit set)."""
    if code.m > 4 or code.n > 4:
        raise ValueError("exhaustive tables are built for m, n <= 4")
    if round_type not in ("from_z", "from_x"):
        raise ValueError("round_type is 'from_z' or 'from_x'")
    g = groups_of(code)
    nq = code.n_qubits
    zbar_masks = [p.z for p in g.z_gauge_gens]
    xbar_masks = [p.x for p in g.x_gauge_gens]
    xstab_masks = [p.x for p in g.x_stabilizer_gens]
    zstab_masks = [p.z for p in g.z_stabilizer_gens]

    # X errors flip Z-type checks and vice versa.
    if round_type == "from_z":
        x_checks, z_checks = zbar_masks, xstab_masks
        final_gauge = xbar_masks  # X gauge measured second; fix with Z-gauge ops
        fix_gens = [(0, p.z) for p in g.z_gauge_gens]
    else:
        x_checks, z_checks = zstab_masks, xbar_masks
        final_gauge = zbar_masks
        fix_gens = [(p.x, 0) for p in g.x_gauge_gens]

    x_recovery: dict = {}
    for mask in _masks_by_weight(nq):
        sig = _flag_bits(mask, x_checks)
        if sig not in x_recovery:
            x_recovery[sig] = mask
    z_recovery: dict = {}
    for mask in _masks_by_weight(nq):
        sig = _flag_bits(mask, z_checks)
        if sig not in z_recovery:
            z_recovery[sig] = mask

    # Gauge fixing: express every reachable final-gauge outcome pattern as a
    # product of gauge-group generators (GF(2) solve by greedy elimination).
    gen_sigs = []
    for gx, gz in fix_gens:
        gen_sigs.append(_flag_bits(gx | gz, final_gauge))
    gauge_fix: dict = {0: (0, 0)}
    frontier = {0: (0, 0)}
    while frontier:
        new = {}
        for sig, (ox, oz) in frontier.items():
            for (gx, gz), gsig in zip(fix_gens, gen_sigs):
                s2 = sig ^ gsig
                if s2 not in gauge_fix:
                    op = (ox ^ gx, oz ^ gz)
                    gauge_fix[s2] = op
                    new[s2] = op
        frontier = new
    return DecoderTable(code, round_type, x_recovery, z_recovery, gauge_fix)


# ---------------------------------------------------------------------------
# The non-Pauli CCZ trailing-EC decoder
# ---------------------------------------------------------------------------


@dataclass
class TecStage1:
    x_recovery: DiagonalCliffordFrame  # inverse of the hypothesized residual
    recorded_rows: dict  # block name -> frozenset of rows, or None (default)
    candidates: tuple
    assumed: tuple  # location of the temporally last candidate, or None
    used_special: bool


class CczTecDecoder:
    """Two-stage decoder for single-piece C^kZ gadgets that violate the
    two-row criterion.

    Stage 1 consumes the Z-gauge outcomes: it locates the X errors, forms
    the candidate set of gates whose failure could have produced them,
    assumes the temporally last candidate failed, applies the exact X and CZ
    recovery for that hypothesis, and records every row an earlier
    candidate's propagation could still have touched.  Stage 2 consumes the
    X-stabilizer outcomes restricted to the recorded rows.  With no
    candidates it defaults to the plain Clifford tables.
    """

    def __init__(self, ga: Circuit, codes):
        names = sorted(ga.block_map, key=lambda k: ga.block_map[k][0])
        if not isinstance(codes, (list, tuple)):
            codes = [codes] * len(names)
        self.ga = ga
        self.codes = dict(zip(names, codes))
        self.names = names
        self.offsets = {nm: ga.block_map[nm][0] for nm in names}
        self.nq = ga.n_qubits
        self.gates = [(t, g) for t, _, g in ga.gates()]

    def _rows_of_mask(self, mask: int) -> dict:
        rows: dict = {nm: set() for nm in self.names}
        q = 0
        while mask:
            if mask & 1:
                nm = self.ga.block_of(q)
                rows[nm].add((q - self.offsets[nm]) // self.codes[nm].n)
            mask >>= 1
            q += 1
        return rows

    def decode_x_pattern(self, zbar_bits: dict) -> int:
        """Min-weight X mask (over the Ga coordinates) from per-block
        Z-gauge flip bits."""
        xmask = 0
        for nm in self.names:
            code = self.codes[nm]
            tbl = build_decoder_table(code, "from_z")
            xmask |= tbl.x_recovery[zbar_bits[nm]] << self.offsets[nm]
        return xmask

    def stage1(self, zbar_bits: dict) -> TecStage1:
        xmask = self.decode_x_pattern(zbar_bits)
        nothing = DiagonalCliffordFrame(self.nq)
        if xmask == 0:
            return TecStage1(nothing, None, (), None, False)
        # candidates: every observed X sits on a node of the gate
        cand = []
        for (t, g) in self.gates:
            supp = 0
            for q in g.qubits:
                supp |= 1 << q
            if xmask & ~supp == 0:
                cand.append((t, g))
        if not cand:
            # no single gate explains the pattern: plain Clifford recovery
            return TecStage1(
                DiagonalCliffordFrame(self.nq, x=xmask), None, (), None, False
            )
        t_star, g_star = max(cand, key=lambda tg: tg[0])
        # hypothesized residual: X(xmask) right after g*, pushed to the end
        f = DiagonalCliffordFrame(self.nq, x=xmask)
        for (t, g) in self.gates:
            if t > t_star:
                f = conjugate(g, f)
        recovery = frame_inverse(f)
        # rows an earlier candidate's failure could still have touched: Z
        # junk on any candidate's own support, plus the endpoints the
        # observed X set would spawn crossing gates between the earliest
        # candidate and the assumed one (later spawns are already corrected)
        recorded = {nm: set() for nm in self.names}
        for (t, g) in cand:
            for nm, rows in self._rows_of_mask(
                sum(1 << q for q in g.qubits)
            ).items():
                recorded[nm] |= rows
        t_min = min(t for t, _ in cand)
        for (v, h) in self.gates:
            if t_min < v <= t_star:
                for q in h.qubits:
                    if (xmask >> q) & 1:
                        others = sum(1 << q2 for q2 in h.qubits if q2 != q)
                        for nm, rows in self._rows_of_mask(others).items():
                            recorded[nm] |= rows
        recorded = {nm: frozenset(rs) for nm, rs in recorded.items()}
        return TecStage1(recovery, recorded, tuple(cand), (t_star,), True)

    def stage2(self, xstab_bits: dict, recorded_rows) -> int:
        """Z-recovery mask from per-block X-stabilizer flags, restricted to
        the recorded rows when a special stage 1 ran."""
        zmask = 0
        for nm in self.names:
            code = self.codes[nm]
            bits = xstab_bits[nm]
            rows0 = _rows_from_xstab(code, bits)
            rows1 = frozenset(range(code.m)) - rows0
            if recorded_rows is not None:
                allowed = recorded_rows[nm]
                ok0, ok1 = rows0 <= allowed, rows1 <= allowed
                if ok0 and not ok1:
                    rows = rows0
                elif ok1 and not ok0:
                    rows = rows1
                else:
                    rows = min((rows0, rows1), key=lambda r: (len(r), sorted(r)))
            else:
                rows = min((rows0, rows1), key=lambda r: (len(r), sorted(r)))
            for i in rows:
                zmask |= 1 << (self.offsets[nm] + code.qubit(i, 0))
        return zmask


@lru_cache(maxsize=None)
def _xstab_row_solutions(m: int):
    out = {}
    for bits in range(1 << (m - 1)):
        rows = [0]
        for i in range(1, m):
            rows.append(rows[-1] ^ ((bits >> (i - 1)) & 1))
        out[bits] = frozenset(i for i, r in enumerate(rows) if r)
    return out


def _rows_from_xstab(code: CodeSpec, bits: int) -> frozenset:
    """The row set with Z-parity flags matching ``bits`` and row 0 clear."""
    return _xstab_row_solutions(code.m)[bits]


def decode_ccz_tec(z_gauge_outcomes: dict, x_stab_outcomes: dict,
                   ga: Circuit, codes) -> tuple:
    """One-shot convenience wrapper: returns (X part, CZ gate list, Z part).

    ``z_gauge_outcomes``/``x_stab_outcomes`` are per-block flip bits.  The
    X and CZ parts come from stage 1 (the exact inverse of the temporally
    last consistent hypothesis); the Z part from the recorded-row stage 2.
    """
    dec = CczTecDecoder(ga, codes)
    s1 = dec.stage1(z_gauge_outcomes)
    zmask = dec.stage2(x_stab_outcomes, s1.recorded_rows)
    return s1.x_recovery.x, sorted(s1.x_recovery.cz), zmask


def apply_recovery(frame: DiagonalCliffordFrame, recovery) -> DiagonalCliffordFrame:
    """Apply a perfect (noiseless) recovery operation after the error."""
    if isinstance(recovery, PauliString):
        recovery = DiagonalCliffordFrame.from_pauli(recovery)
    return frame_multiply(recovery, frame)
