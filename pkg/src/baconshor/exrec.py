"""Extended-rectangle assembly and exact two-fault counting.

An exREC is LEC.Ga.TEC (LEC acting first): leading type-1 Steane error
correction taking every block from the X gauge to the Z gauge, the logical
gate on Z-gauge blocks, and trailing type-1 correction back to the X gauge.
Failure is judged by ideal decoders: a run fails when the ideally decoded
state after the TEC does not match the expected state given the ideally
decoded state after the LEC.  Faults confined to the LEC define the
incoming-error reference and never count as failures.

Errors propagate as diagonal-Clifford frames (Pauli strings plus CZ factors
spawned by X errors crossing CCZ gates).  The trailing X-basis measurement
round expands the frame into a phase-coherent Pauli sum, splits it into
measurement branches keyed by the deterministic X-stabilizer flips, groups
degenerate terms by stabilizer-plus-fixed-gauge cosets with exact relative
signs, and scores each branch against the expected logical action on a
dense few-qubit logical matrix.

Counting sweeps all <=2-fault configurations once, aggregating
failure weight per unordered noise-class pair; the two-fault polynomial is
then exact in the component rates and can be evaluated at any rate vector,
which makes pseudothreshold bisection and curve export cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuits import Circuit, GateSpec
from .code import CodeSpec, Z_GAUGE, X_GAUGE, groups_of
from .gadgets import BLOCK_NAMES, ccz_3x3, steane_round
from .noise import (
    CczTecDecoder,
    FaultEvent,
    NoiseModel,
    NOISE_CLASSES,
    build_decoder_table,
    enumerate_faults,
)
from .pauli import (
    DiagonalCliffordFrame,
    GroupReducer,
    PauliString,
    frame_multiply,
    multiply,
)

SEG_LEC, SEG_GA, SEG_TECB, SEG_TECA = 0, 1, 2, 3

GATE_LABELS = ("I", "H", "CNOT", "CCZ")

_PHASES = (1, 1j, -1, -1j)


@dataclass
class ExRec:
    gate_label: str
    code: CodeSpec
    n_blocks: int
    circuit: Circuit  # the full LEC.Ga.TEC circuit
    lec: Circuit
    ga: Circuit
    tec: Circuit
    _engine: object = field(default=None, repr=False)

    @property
    def engine(self):
        if self._engine is None:
            self._engine = ExRecEngine(self)
        return self._engine


def _emit_multi_round(circ: Circuit, code: CodeSpec, basis: str,
                      data_offs, anc_offs):
    """One Steane gauge round for several blocks in shared timesteps.

    Ancilla CATs are prepared off the data timeline (fresh qubits), so the
    data participates only in the coupling step; during the ancilla
    measurement step the data idles explicitly (measurement blocks
    concurrent gates on the trap), which is a noisy identity location.
    """
    sub = Circuit(circ.n_qubits)
    for d, a in zip(data_offs, anc_offs):
        one = Circuit(circ.n_qubits)
        steane_round(code, basis, one, d, a)
        while len(sub.timesteps) < len(one.timesteps):
            sub.timesteps.append([])
        for t, step in enumerate(one.timesteps):
            sub.timesteps[t].extend(step)
    for d in data_offs:
        sub.timesteps[-1].extend(
            GateSpec("I", (d + q,)) for q in range(code.n_qubits)
        )
    for step in sub.timesteps:
        circ.add_step(step)


def assemble(gate_label: str, code: CodeSpec = None) -> ExRec:
    """Build the exREC for one logical gate on 3x3 Z-gauge blocks."""
    if code is None:
        code = CodeSpec(3, 3, Z_GAUGE)
    if gate_label not in GATE_LABELS:
        raise ValueError(f"gate_label must be one of {GATE_LABELS}")
    B = {"I": 1, "H": 1, "CNOT": 2, "CCZ": 3}[gate_label]
    nq = code.n_qubits
    n_total = B * nq * 5
    circ = Circuit(n_total)
    data = []
    for b in range(B):
        circ.block_map[BLOCK_NAMES[b]] = (b * nq, (b + 1) * nq)
        data.append(b * nq)
    anc = {}
    base = B * nq
    for b in range(B):
        for r, nm in enumerate(("lec_a", "lec_b", "tec_b", "tec_a")):
            off = base + (b * 4 + r) * nq
            anc[(b, nm)] = off
            circ.block_map[f"{nm}{BLOCK_NAMES[b]}"] = (off, off + nq)

    # LEC: from the X gauge, type-1 = X round then Z round
    _emit_multi_round(circ, code, "X", data, [anc[(b, "lec_a")] for b in range(B)])
    circ.markers["lec_a_end"] = circ.depth
    _emit_multi_round(circ, code, "Z", data, [anc[(b, "lec_b")] for b in range(B)])
    circ.markers["lec_end"] = circ.depth
    lec = Circuit(n_total, [list(s) for s in circ.timesteps])

    # Ga on Z-gauge blocks
    ga_start = circ.depth
    if gate_label == "I":
        circ.add_step(GateSpec("I", (q,)) for q in range(nq))
    elif gate_label == "H":
        circ.add_step(GateSpec("H", (q,)) for q in range(nq))
        circ.meta["permutation"] = {
            "time": circ.depth,
            "map": [code.qubit(j, i) for i in range(code.m) for j in range(code.n)],
        }
    elif gate_label == "CNOT":
        circ.add_step(GateSpec("CNOT", (q, nq + q)) for q in range(nq))
    else:
        for step in ccz_3x3().timesteps:
            circ.add_step(step)
    circ.markers["ga_end"] = circ.depth
    ga = Circuit(B * nq, [list(s) for s in circ.timesteps[ga_start:]])
    for b in range(B):
        ga.block_map[BLOCK_NAMES[b]] = (b * nq, (b + 1) * nq)

    # TEC: from the Z gauge, type-1 = Z round then X round
    tec_start = circ.depth
    _emit_multi_round(circ, code, "Z", data, [anc[(b, "tec_b")] for b in range(B)])
    circ.markers["tec_b_end"] = circ.depth
    _emit_multi_round(circ, code, "X", data, [anc[(b, "tec_a")] for b in range(B)])
    circ.markers["tec_end"] = circ.depth
    tec = Circuit(n_total, [list(s) for s in circ.timesteps[tec_start:]])
    circ.meta["gate_label"] = gate_label
    return ExRec(gate_label, code, B, circ, lec, ga, tec)


def _shift_mask(m: int, off: int) -> int:
    return m << off


def _canon(f: DiagonalCliffordFrame):
    return (f.x, f.z, tuple(sorted(f.cz)))


@dataclass
class _Event:
    idx: int
    loc: tuple
    cls_id: int
    seg: int
    rank: int
    frame0: DiagonalCliffordFrame
    t_after: int  # first timestep the fault propagates through
    F_end: DiagonalCliffordFrame = None
    Phi_lec: DiagonalCliffordFrame = None
    sig: tuple = None
    sig_id: int = -1


class ExRecEngine:
    """Exact propagation, decoding, and verdicts for one exREC."""

    def __init__(self, exrec: ExRec):
        self.exrec = exrec
        self.code = exrec.code
        self.B = exrec.n_blocks
        circ = exrec.circuit
        self.circ = circ
        self.n = circ.n_qubits
        nq = self.code.n_qubits
        self.nq = nq
        g = groups_of(self.code)

        self.t_lec_a = circ.markers["lec_a_end"]
        self.t_lec = circ.markers["lec_end"]
        self.t_ga = circ.markers["ga_end"]
        self.t_tecb = circ.markers["tec_b_end"]
        self.t_end = circ.markers["tec_end"]

        perm = circ.meta.get("permutation")
        self._perm_time = perm["time"] if perm else None
        if perm:
            full = list(range(self.n))
            for q, tgt in enumerate(perm["map"]):
                full[q] = tgt
            self._perm = full
        else:
            self._perm = None

        self.data_off = [b * nq for b in range(self.B)]
        base = self.B * nq
        self.anc_off = {}
        for b in range(self.B):
            for r, nm in enumerate(("lec_a", "lec_b", "tec_b", "tec_a")):
                self.anc_off[(b, nm)] = base + (b * 4 + r) * nq

        def shifted(masks, off):
            return [m << off for m in masks]

        xbar = [p.x for p in g.x_gauge_gens]
        zbar = [p.z for p in g.z_gauge_gens]
        xst = [p.x for p in g.x_stabilizer_gens]
        zst = [p.z for p in g.z_stabilizer_gens]
        self.m_lec_a = [shifted(xbar, self.anc_off[(b, "lec_a")]) for b in range(self.B)]
        self.m_lec_b = [shifted(zst, self.anc_off[(b, "lec_b")]) for b in range(self.B)]
        self.m_lec_b_gauge = [shifted(zbar, self.anc_off[(b, "lec_b")]) for b in range(self.B)]
        self.m_tecb = [shifted(zbar, self.anc_off[(b, "tec_b")]) for b in range(self.B)]
        self.m_teca = [shifted(xst, self.anc_off[(b, "tec_a")]) for b in range(self.B)]
        self.m_teca_xbar = [shifted(xbar, self.anc_off[(b, "tec_a")]) for b in range(self.B)]
        self.m_d_zbar = [shifted(zbar, o) for o in self.data_off]
        self.m_d_xst = [shifted(xst, o) for o in self.data_off]
        self.m_d_xbar = [shifted(xbar, o) for o in self.data_off]
        self.m_d_zst = [shifted(zst, o) for o in self.data_off]
        self.logical_x_mask = [g.logical_x.x << o for o in self.data_off]
        self.logical_z_mask = [g.logical_z.z << o for o in self.data_off]

        self.data_mask = sum(((1 << nq) - 1) << o for o in self.data_off)
        self.teca_mask = sum(
            ((1 << nq) - 1) << self.anc_off[(b, "tec_a")] for b in range(self.B)
        )
        self.live_mask = self.data_mask | self.teca_mask

        self.tbl_from_x = build_decoder_table(self.code, "from_x")
        self.tbl_from_z = build_decoder_table(self.code, "from_z")

        ga_for_decoder = exrec.ga if exrec.gate_label == "CCZ" else Circuit(
            self.B * nq, [], dict(exrec.ga.block_map)
        )
        self.tec_decoder = CczTecDecoder(ga_for_decoder, [self.code] * self.B)

        # unitary gate schedule for propagation, with per-gate support masks
        self.sched = []
        for t, step in enumerate(circ.timesteps):
            gates = []
            for gg in step:
                if gg.is_unitary and gg.kind != "I":
                    m = 0
                    for q in gg.qubits:
                        m |= 1 << q
                    gates.append((gg.kind, gg.qubits, m))
            self.sched.append(gates)

        self._build_groups()
        self._build_events()
        self._rl_cache = {}
        self._r1_cache = {}
        self._reduce_cache_tec = {}
        self._reduce_cache_fin = {}
        self._rin_cache = {}
        self.branch_dev = 0.0  # worst |sum of branch probabilities - 1|

        eye = np.eye(1 << self.B, dtype=complex)
        if exrec.gate_label == "I":
            U = eye
        elif exrec.gate_label == "H":
            U = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
        elif exrec.gate_label == "CNOT":
            U = np.zeros((4, 4), dtype=complex)
            for v in range(4):
                U[v ^ ((v & 1) << 1), v] = 1  # block 0 controls block 1
        else:
            U = eye.copy()
            for v in range(8):
                if v == 7:
                    U[v, v] = -1
        self.U = U
        self._pauli_dense = {}
        self._expected_cache = {}

    # -- construction helpers ------------------------------------------------

    def _build_groups(self):
        """Stabilizer-plus-fixed-gauge reducers for the trailing X round and
        for the final classification."""
        g = groups_of(self.code)
        nq, n = self.nq, self.n
        gens_tec = []
        for b in range(self.B):
            off = self.data_off[b]
            for p in g.z_gauge_gens:
                gens_tec.append(PauliString(n, 0, p.z << off))
            for p in g.x_stabilizer_gens:
                gens_tec.append(PauliString(n, p.x << off))
            aoff = self.anc_off[(b, "tec_a")]
            for p in g.x_gauge_gens:
                gens_tec.append(PauliString(n, p.x << aoff))
            for k in range(self.code.n):
                zc = 0
                for i in range(self.code.m):
                    zc |= 1 << (aoff + self.code.qubit(i, k))
                gens_tec.append(PauliString(n, 0, zc))
        # conjugate through the trailing X-round coupling (anc -> data CNOTs)
        coupl = []
        for b in range(self.B):
            aoff = self.anc_off[(b, "tec_a")]
            off = self.data_off[b]
            for q in range(nq):
                coupl.append(("CNOT", (aoff + q, off + q)))
        conj_gens = []
        for p in gens_tec:
            f = DiagonalCliffordFrame.from_pauli(p)
            for kind, qubits in coupl:
                f = _conj_gate(f, kind, qubits)
            conj_gens.append(f.to_pauli())
        anc_first = []
        for b in range(self.B):
            aoff = self.anc_off[(b, "tec_a")]
            anc_first += list(range(aoff, aoff + nq))
        for b in range(self.B):
            off = self.data_off[b]
            anc_first += list(range(off, off + nq))
        self.red_tec = GroupReducer(n, conj_gens, priority=anc_first)

        gens_fin = []
        for b in range(self.B):
            off = self.data_off[b]
            for p in g.x_gauge_gens:
                gens_fin.append(PauliString(n, p.x << off))
            for p in g.z_stabilizer_gens:
                gens_fin.append(PauliString(n, 0, p.z << off))
        self.red_fin = GroupReducer(n, gens_fin)
        self.logical_x_ps = [
            PauliString(self.n, g.logical_x.x << off) for off in self.data_off
        ]
        self.logical_z_ps = [
            PauliString(self.n, 0, g.logical_z.z << off) for off in self.data_off
        ]

    def _build_events(self):
        raw = enumerate_faults(self.circ, NoiseModel.uniform(1.0))
        self.events = []
        self.loc_events = {}
        sig_index = {}
        self.sigs = []
        for ev in raw:
            t, i = ev.location
            gate = self.circ.timesteps[t][i]
            x = z = 0
            for k, q in enumerate(gate.qubits):
                if (ev.error.x >> k) & 1:
                    x |= 1 << q
                if (ev.error.z >> k) & 1:
                    z |= 1 << q
            frame0 = DiagonalCliffordFrame(self.n, x, z, frozenset(), 0)
            if t < self.t_lec:
                seg, rank = SEG_LEC, 0
            elif t < self.t_ga:
                seg, rank = SEG_GA, t - self.t_lec
            elif t < self.t_tecb:
                seg, rank = SEG_TECB, 0
            else:
                seg, rank = SEG_TECA, 0
            e = _Event(
                idx=len(self.events),
                loc=(t, i),
                cls_id=NOISE_CLASSES.index(ev.noise_cls),
                seg=seg,
                rank=rank,
                frame0=frame0,
                t_after=t + 1,
            )
            if seg == SEG_LEC:
                e.Phi_lec = self.propagate(frame0, e.t_after, self.t_lec)
                e.F_end = self.propagate(e.Phi_lec, self.t_lec, self.t_end)
            else:
                e.F_end = self.propagate(frame0, e.t_after, self.t_end)
            e.sig = (seg, rank, _canon(e.F_end),
                     _canon(e.Phi_lec) if e.Phi_lec is not None else None)
            if e.sig not in sig_index:
                sig_index[e.sig] = len(self.sigs)
                self.sigs.append(e)
            e.sig_id = sig_index[e.sig]
            self.events.append(e)
            self.loc_events.setdefault(ev.location, []).append(e)

    # -- propagation ---------------------------------------------------------

    def propagate(self, f: DiagonalCliffordFrame, t_from: int, t_to: int) -> DiagonalCliffordFrame:
        x, z, cz, phase = f.x, f.z, set(f.cz), f.phase
        czmask = 0
        for (a, b) in cz:
            czmask |= (1 << a) | (1 << b)
        for t in range(t_from, t_to):
            if self._perm_time is not None and t == self._perm_time:
                x, z, cz, czmask = self._apply_perm(x, z, cz)
            live = x | z | czmask
            for kind, qubits, gmask in self.sched[t]:
                if not (live & gmask):
                    continue
                x, z, cz, phase, czmask = _conj_inplace(x, z, cz, phase, czmask, kind, qubits)
                live = x | z | czmask
        return DiagonalCliffordFrame(self.n, x, z, frozenset(cz), phase)

    def _apply_perm(self, x, z, cz):
        p = self._perm
        nx = nz = 0
        q = 0
        xx, zz = x, z
        while xx or zz:
            if xx & 1:
                nx |= 1 << p[q]
            if zz & 1:
                nz |= 1 << p[q]
            xx >>= 1
            zz >>= 1
            q += 1
        ncz = set()
        czmask = 0
        for (a, b) in cz:
            a2, b2 = p[a], p[b]
            ncz.add((a2, b2) if a2 < b2 else (b2, a2))
            czmask |= (1 << a2) | (1 << b2)
        return nx, nz, ncz, czmask

    # -- per-configuration run ----------------------------------------------

    def run_events(self, evs) -> float:
        """Failure probability of one fault configuration (exact, branch
        weighted).  ``evs`` is a list of _Event, at most two."""
        evs = sorted(evs, key=lambda e: (e.seg, e.rank))
        lec_evs = [e for e in evs if e.seg == SEG_LEC]
        rest = [e for e in evs if e.seg != SEG_LEC]

        # ---- LEC syndromes and recovery ----
        ident = DiagonalCliffordFrame(self.n)
        p_lec = ident
        for e in reversed(lec_evs):
            p_lec = frame_multiply(p_lec, e.F_end) if p_lec is not ident else e.F_end
        rl_key = None
        if lec_evs:
            zc = p_lec.z
            xc = p_lec.x
            rx = rz = 0
            for b in range(self.B):
                sa = _bits(zc, self.m_lec_a[b])  # X-gauge flags (Z content flips X meas)
                sb = _bits(xc, self.m_lec_b[b])  # Z-stabilizer flags
                xr = self.tbl_from_x.x_recovery[sb]
                rz |= self.tbl_from_x.z_recovery[sa] << self.data_off[b]
                # type-1 gauge fixing: the X-gauge element whose Z-gauge
                # flip signature matches the observed-plus-recovery flips
                # returns the block to the +1 Z-gauge eigenspace
                sig = _bits(xc, self.m_lec_b_gauge[b]) ^ _bits(
                    xr << self.data_off[b], self.m_d_zbar[b]
                )
                gx, _ = self.tbl_from_x.gauge_fix[sig]
                rx |= (xr ^ gx) << self.data_off[b]
            rl_key = (rx, rz)
            r_in = self._reference_class(lec_evs, rx, rz)
        else:
            r_in = (0,) * (2 * self.B)
        expected = self._expected_dense(r_in)

        # ---- assemble the frame entering the trailing X round ----
        core = ident
        for e in reversed([e for e in rest if e.seg in (SEG_GA, SEG_TECB)]):
            core = frame_multiply(core, e.F_end) if core is not ident else e.F_end
        if rl_key is not None and rl_key != (0, 0):
            core = frame_multiply(core, self._rl_end(rl_key))
        if lec_evs:
            core = frame_multiply(core, p_lec) if core is not ident else p_lec

        zbar_bits = {}
        for b in range(self.B):
            zbar_bits[BLOCK_NAMES[b]] = _bits(core.x, self.m_tecb[b])
        s1 = self.tec_decoder.stage1(zbar_bits)
        f1 = core
        rec = s1.x_recovery
        if not rec.is_identity():
            f1 = frame_multiply(self._r1_end(rec), f1)
        for e in reversed([e for e in rest if e.seg == SEG_TECA]):
            f1 = frame_multiply(e.F_end, f1)

        # keep only live coordinates (measured ancillas already consumed)
        f1 = DiagonalCliffordFrame(
            self.n, f1.x & self.live_mask, f1.z & self.live_mask, f1.cz, f1.phase
        )

        # ---- trailing X round: expand, branch, decode, ideal-decode ----
        return self._trailing_rounds(f1, s1.recorded_rows, expected)

    # -- pieces ---------------------------------------------------------------

    def _reference_class(self, lec_evs, rx, rz):
        key = (tuple(e.idx for e in lec_evs), rx, rz)
        hit = self._rin_cache.get(key)
        if hit is not None:
            return hit
        rho = None
        for e in reversed(lec_evs):
            rho = e.Phi_lec if rho is None else frame_multiply(rho, e.Phi_lec)
        rho = frame_multiply(
            DiagonalCliffordFrame(self.n, rx, rz, frozenset(),
                                  _popcount_bits(rx & rz)),
            rho,
        )
        # ideal decoder after the LEC: type-1 from the Z gauge
        x = rho.x & self.data_mask
        z = rho.z & self.data_mask
        out = []
        for b in range(self.B):
            bz = _bits(x, self.m_d_zbar[b])
            x ^= self.tbl_from_z.x_recovery[bz] << self.data_off[b]
            bx = _bits(z, self.m_d_xst[b])
            z ^= self.tbl_from_z.z_recovery[bx] << self.data_off[b]
            lx = _popcount_bits(x & self.logical_z_mask[b]) & 1
            lz = _popcount_bits(z & self.logical_x_mask[b]) & 1
            out += [lx, lz]
        out = tuple(out)
        self._rin_cache[key] = out
        return out

    def _rl_end(self, key):
        hit = self._rl_cache.get(key)
        if hit is None:
            rx, rz = key
            f = DiagonalCliffordFrame(self.n, rx, rz, frozenset(),
                                      _popcount_bits(rx & rz))
            hit = self.propagate(f, self.t_lec, self.t_end)
            self._rl_cache[key] = hit
        return hit

    def _r1_end(self, rec: DiagonalCliffordFrame):
        key = _canon(rec) + (rec.phase,)
        hit = self._r1_cache.get(key)
        if hit is None:
            hit = self.propagate(rec, self.t_tecb, self.t_end)
            self._r1_cache[key] = hit
        return hit

    def _expected_dense(self, r_in):
        hit = self._expected_cache.get(r_in)
        if hit is None:
            P = self._logical_dense(r_in)
            hit = self.U @ P @ self.U.conj().T
            self._expected_cache[r_in] = hit
        return hit

    def _logical_dense(self, lbits):
        hit = self._pauli_dense.get(lbits)
        if hit is None:
            X = np.array([[0, 1], [1, 0]], dtype=complex)
            Z = np.diag([1, -1]).astype(complex)
            M = np.array([[1.0 + 0j]])
            for b in range(self.B):
                lx, lz = lbits[2 * b], lbits[2 * b + 1]
                m = np.eye(2, dtype=complex)
                if lx:
                    m = m @ X
                if lz:
                    m = m @ Z
                M = np.kron(m, M)  # block 0 least significant
            self._pauli_dense[lbits] = M
            hit = M
        return hit

    def _reduce_tec(self, x, z):
        key = (x, z)
        hit = self._reduce_cache_tec.get(key)
        if hit is None:
            r = self.red_tec.reduce(PauliString(self.n, x, z))
            hit = (r.x, r.z, r.phase)
            self._reduce_cache_tec[key] = hit
        return hit

    def _reduce_fin(self, x, z):
        key = (x, z)
        hit = self._reduce_cache_fin.get(key)
        if hit is None:
            r = self.red_fin.reduce(PauliString(self.n, x, z))
            hit = (r.x, r.z, r.phase)
            self._reduce_cache_fin[key] = hit
        return hit

    def _trailing_rounds(self, f1: DiagonalCliffordFrame, recorded_rows, expected):
        # expand CZ content into a coherent Pauli sum over live coordinates
        terms = {(f1.x, f1.z): _PHASES[f1.phase] + 0j}
        for (a, b) in sorted(f1.cz):
            za, zb = 1 << a, 1 << b
            new = {}
            for (x, z), c in terms.items():
                half = c / 2.0
                for dz, sgn in ((0, 1), (za, 1), (zb, 1), (za | zb, -1)):
                    k = (x, z ^ dz)
                    v = new.get(k)
                    new[k] = sgn * half if v is None else v + sgn * half
            terms = new

        # canonicalize and branch on deterministic trailing-round flips
        branches = {}
        for (x, z), c in terms.items():
            if abs(c) < 1e-15:
                continue
            flips = 0
            for b in range(self.B):
                flips = (flips << 2) | _bits(z, self.m_teca[b])
            cx, cz, dphase = self._reduce_tec(x, z)
            amp = c * _PHASES[dphase]
            d = branches.setdefault(flips, {})
            k = (cx, cz)
            d[k] = d.get(k, 0) + amp

        total = 0.0
        fail = 0.0
        for flips, d in branches.items():
            pb = sum(abs(v) ** 2 for v in d.values())
            if pb < 1e-18:
                continue
            # stage 2: Z recovery on recorded rows from the X-stabilizer flags
            bits = {}
            fl = flips
            for b in range(self.B - 1, -1, -1):
                bits[BLOCK_NAMES[b]] = fl & 3
                fl >>= 2
            zrec = self.tec_decoder.stage2(bits, recorded_rows)
            fail += self._ideal_decode_branch(d, zrec, expected)
            total += pb
        dev = abs(total - 1.0)
        if dev > self.branch_dev:
            self.branch_dev = dev
        return fail

    def _ideal_decode_branch(self, d, zrec, expected) -> float:
        # apply the stage-2 Z recovery and the type-1 gauge fixing (the
        # Z-gauge element matching each term's observed-plus-recovery X-gauge
        # flips restores the +1 eigenspace of the new gauge), then run the
        # ideal decoder (type-1 from the X gauge).
        zrec_sig = [
            _bits(zrec, self.m_d_xbar[b]) for b in range(self.B)
        ]
        sub = {}
        for (x, z), amp in d.items():
            gz_all = 0
            for b in range(self.B):
                sig = _bits(z, self.m_teca_xbar[b]) ^ zrec_sig[b]
                _, gz = self.tbl_from_z.gauge_fix[sig]
                gz_all |= gz << self.data_off[b]
            fix = zrec ^ gz_all
            if fix:
                amp = amp * (1 - 2 * (_popcount_bits(fix & x) & 1))
                z = z ^ fix
            key1 = 0
            for b in range(self.B):
                key1 = (key1 << 6) | _bits(z, self.m_d_xbar[b])
            s = sub.setdefault(key1, {})
            s[(x, z)] = s.get((x, z), 0) + amp

        fail = 0.0
        for key1, terms in sub.items():
            # per-branch Z recovery from the X-gauge flags
            zfix = 0
            k1 = key1
            for b in range(self.B - 1, -1, -1):
                zfix |= self.tbl_from_x.z_recovery[k1 & 63] << self.data_off[b]
                k1 >>= 6
            sectors = {}
            for (x, z), amp in terms.items():
                if zfix:
                    amp = amp * (1 - 2 * (_popcount_bits(zfix & x) & 1))
                    z = z ^ zfix
                # second ideal round: X recovery from Z-stabilizer flags
                xfix = 0
                for b in range(self.B):
                    bb = _bits(x, self.m_d_zst[b])
                    xfix |= self.tbl_from_x.x_recovery[bb] << self.data_off[b]
                x2 = x ^ xfix
                cx, cz, dph = self._reduce_fin(x2, z)
                amp = amp * _PHASES[dph]
                lbits = []
                for b in range(self.B):
                    lbits.append(_popcount_bits(cx & self.logical_z_mask[b]) & 1)
                    lbits.append(_popcount_bits(cz & self.logical_x_mask[b]) & 1)
                lbits = tuple(lbits)
                # strip the logical representative; what remains keys the
                # orthogonal (junk) sector
                rem = PauliString(self.n, cx, cz)
                for b in range(self.B):
                    if lbits[2 * b]:
                        rem = multiply(rem, self.logical_x_ps[b])
                    if lbits[2 * b + 1]:
                        rem = multiply(rem, self.logical_z_ps[b])
                rr = self.red_fin.reduce(rem)
                junk = (rr.x, rr.z)
                amp = amp * _PHASES[(-rr.phase) % 4]
                sec = sectors.setdefault(junk, {})
                sec[lbits] = sec.get(lbits, 0) + amp
            for junk, logi in sectors.items():
                M = np.zeros_like(expected)
                w = 0.0
                for lbits, amp in logi.items():
                    M += amp * self._logical_dense(lbits)
                    w += abs(amp) ** 2
                if w < 1e-18:
                    continue
                # proportionality test against the expected logical action
                num = abs(np.vdot(expected, M)) ** 2
                den = (np.vdot(expected, expected).real *
                       np.vdot(M, M).real)
                if den <= 0 or num / den < 1.0 - 1e-9:
                    fail += w
        return fail

    # -- public wrappers ------------------------------------------------------

    def event_by_fault(self, fe: FaultEvent) -> _Event:
        for e in self.loc_events.get(fe.location, []):
            t, i = fe.location
            gate = self.circ.timesteps[t][i]
            x = z = 0
            for k, q in enumerate(gate.qubits):
                if (fe.error.x >> k) & 1:
                    x |= 1 << q
                if (fe.error.z >> k) & 1:
                    z |= 1 << q
            if e.frame0.x == x and e.frame0.z == z:
                return e
        raise KeyError(f"no such fault event: {fe}")


def _popcount_bits(v: int) -> int:
    return bin(v).count("1")


def _bits(content: int, masks) -> int:
    out = 0
    for k, m in enumerate(masks):
        if bin(content & m).count("1") & 1:
            out |= 1 << k
    return out


def _conj_gate(f: DiagonalCliffordFrame, kind, qubits) -> DiagonalCliffordFrame:
    from .pauli import conjugate

    return conjugate((kind, qubits), f)


def _conj_inplace(x, z, cz, phase, czmask, kind, qubits):
    """Mutable-state version of pauli.conjugate for the propagation loop."""
    if kind == "CNOT":
        c, t = qubits
        if (x >> c) & 1:
            x ^= 1 << t
        if (z >> t) & 1:
            z ^= 1 << c
        if czmask & (1 << t):
            changed = []
            for pr in cz:
                if t in pr:
                    changed.append(pr)
            for pr in changed:
                u = pr[0] if pr[1] == t else pr[1]
                if u == c:
                    # CZ(c,t) -> CZ(c,t) Z(c); the pair survives
                    z ^= 1 << c
                else:
                    p2 = (c, u) if c < u else (u, c)
                    cz.remove(pr)
                    # CZ(t,u) -> CZ(t,u) CZ(c,u): keep the original too
                    cz.add(pr)
                    if p2 in cz:
                        cz.remove(p2)
                    else:
                        cz.add(p2)
            czmask = 0
            for (a, b) in cz:
                czmask |= (1 << a) | (1 << b)
    elif kind == "CZ":
        a, b = qubits
        xa, xb = (x >> a) & 1, (x >> b) & 1
        if xa and xb:
            phase += 2
            z ^= (1 << a) | (1 << b)
        elif xa:
            z ^= 1 << b
        elif xb:
            z ^= 1 << a
    elif kind in ("CCZ", "CkZ"):
        hit = [q for q in qubits if (x >> q) & 1]
        if hit:
            rest = [q for q in qubits if not (x >> q) & 1]
            for r in range(1 << len(hit)):
                if r == (1 << len(hit)) - 1:
                    continue
                mono = rest + [hit[i] for i in range(len(hit)) if (r >> i) & 1]
                if len(mono) == 0:
                    phase += 2
                elif len(mono) == 1:
                    z ^= 1 << mono[0]
                elif len(mono) == 2:
                    a, b = mono
                    p2 = (a, b) if a < b else (b, a)
                    if p2 in cz:
                        cz.remove(p2)
                        czmask = 0
                        for (aa, bb) in cz:
                            czmask |= (1 << aa) | (1 << bb)
                    else:
                        cz.add(p2)
                        czmask |= (1 << a) | (1 << b)
                else:
                    raise ValueError("frame left the Z/CZ closure")
    elif kind == "H":
        (q,) = qubits
        if czmask & (1 << q):
            raise ValueError("H met a CZ factor")
        xb, zb = (x >> q) & 1, (z >> q) & 1
        if xb != zb:
            x ^= 1 << q
            z ^= 1 << q
        elif xb and zb:
            phase += 2
    elif kind == "X":
        (q,) = qubits
        if (z >> q) & 1:
            phase += 2
        if czmask & (1 << q):
            for pr in list(cz):
                if q in pr:
                    u = pr[0] if pr[1] == q else pr[1]
                    z ^= 1 << u
    elif kind == "Z":
        (q,) = qubits
        if (x >> q) & 1:
            phase += 2
    else:
        raise ValueError(kind)
    return x, z, cz, phase % 4, czmask


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------


@dataclass
class ExRecResult:
    gate_label: str
    p2_fail: float
    p2_succ: float
    threshold_lower: float = None
    threshold_upper: float = None

    @property
    def deficit(self) -> float:
        return 1.0 - (self.p2_fail + self.p2_succ)


@dataclass
class CountSweep:
    """Rate-independent failure aggregates of one exREC.

    ``n_loc``: locations per noise class.  ``n_events``: damaging Paulis per
    class per location class.  ``single_fail[k]``: total failure over all
    single-fault configurations of class k (each weighted 1).
    ``pair_fail[(k1,k2)]``: total failure over unordered two-fault configs.
    ``pair_count``: number of such configs (for the success complement).
    """

    gate_label: str
    n_loc: dict
    single_fail: dict
    single_count: dict
    pair_fail: dict
    pair_count: dict
    branch_dev: float
    n_runs: int

    def evaluate(self, model: NoiseModel) -> ExRecResult:
        # u_k = per-event odds factor; Z = prod over locations of (1 - p)
        evs_per_loc = {"ccz": 63, "cnot": 15, "1q": 3, "prep": 1, "meas": 1}
        logZ = 0.0
        for k, nl in self.n_loc.items():
            p = model.rate(k)
            if p >= 1.0:
                return ExRecResult(self.gate_label, 1.0, 0.0)
            logZ += nl * math.log1p(-p)
        Z = math.exp(logZ)
        u = {
            k: model.rate(k) / evs_per_loc[k] / (1.0 - model.rate(k))
            for k in self.n_loc
        }
        fail = 0.0
        succ = Z  # zero-fault configuration never fails
        for k in self.n_loc:
            w = Z * u[k]
            fail += w * self.single_fail.get(k, 0.0)
            succ += w * (self.single_count.get(k, 0) - self.single_fail.get(k, 0.0))
        for (k1, k2), tot in self.pair_count.items():
            w = Z * u[k1] * u[k2]
            f = self.pair_fail.get((k1, k2), 0.0)
            fail += w * f
            succ += w * (tot - f)
        return ExRecResult(self.gate_label, fail, succ)


def _class_pair_key(k1, k2):
    return (k1, k2) if k1 <= k2 else (k2, k1)


def _sweep_worker_range(engine, u_lo, u_hi, corr_pairs):
    """Failure aggregates for signature pairs with first index in range."""
    sigs = engine.sigs
    events = engine.events
    by_sig = {}
    for e in events:
        by_sig.setdefault(e.sig_id, []).append(e)
    pair_fail = {}
    corr_vals = {}
    n_runs = 0
    for ui in range(u_lo, u_hi):
        eu = sigs[ui]
        for vi in range(ui, len(sigs)):
            ev = sigs[vi]
            needed = (ui, vi) in corr_pairs
            if eu.seg == SEG_LEC and ev.seg == SEG_LEC:
                f = 0.0  # LEC-only faults define the reference, never fail
            else:
                f = engine.run_events([eu, ev])
                n_runs += 1
            if needed:
                corr_vals[(ui, vi)] = f
            if f == 0.0:
                continue
            cu = {}
            for e in by_sig[ui]:
                cu[e.cls_id] = cu.get(e.cls_id, 0) + 1
            cv = {}
            for e in by_sig[vi]:
                cv[e.cls_id] = cv.get(e.cls_id, 0) + 1
            if ui == vi:
                evs = by_sig[ui]
                for a in range(len(evs)):
                    for b in range(a + 1, len(evs)):
                        key = _class_pair_key(
                            NOISE_CLASSES[evs[a].cls_id], NOISE_CLASSES[evs[b].cls_id]
                        )
                        pair_fail[key] = pair_fail.get(key, 0.0) + f
            else:
                for ka, na in cu.items():
                    for kb, nb in cv.items():
                        key = _class_pair_key(NOISE_CLASSES[ka], NOISE_CLASSES[kb])
                        pair_fail[key] = pair_fail.get(key, 0.0) + f * na * nb
    return pair_fail, corr_vals, n_runs, engine.branch_dev


def run_sweep(exrec: ExRec, workers: int = 1, max_configs: int = None) -> CountSweep:
    """Exhaustive <=2-fault sweep with signature deduplication."""
    engine = exrec.engine
    events = engine.events
    sigs = engine.sigs
    n_pairs_raw = len(events) * (len(events) - 1) // 2
    if max_configs is not None and n_pairs_raw > max_configs:
        raise RuntimeError(
            f"{n_pairs_raw} two-fault configurations exceed the cap {max_configs}"
        )

    n_loc = {}
    for (t, i), evs in engine.loc_events.items():
        k = NOISE_CLASSES[evs[0].cls_id]
        n_loc[k] = n_loc.get(k, 0) + 1

    # single faults
    single_fail = {}
    single_count = {}
    sig_fail_single = {}
    for ui, eu in enumerate(sigs):
        sig_fail_single[ui] = 0.0 if eu.seg == SEG_LEC else engine.run_events([eu])
    for e in events:
        k = NOISE_CLASSES[e.cls_id]
        single_count[k] = single_count.get(k, 0) + 1
        single_fail[k] = single_fail.get(k, 0.0) + sig_fail_single[e.sig_id]

    # same-location event pairs are not valid configurations; collect the
    # signature pairs needing correction
    corr_pairs = set()
    for evs in engine.loc_events.values():
        for a in range(len(evs)):
            for b in range(a + 1, len(evs)):
                u, v = sorted((evs[a].sig_id, evs[b].sig_id))
                corr_pairs.add((u, v))

    nU = len(sigs)
    if workers > 1:
        import multiprocessing as mp

        order = sorted(range(nU), key=lambda u: nU - u)  # heavy rows first
        slices = [order[w::workers] for w in range(workers)]
        with mp.get_context("fork").Pool(
            workers, initializer=_pool_init, initargs=(exrec.gate_label,)
        ) as pool:
            parts = pool.map(_pool_job, [(sl, sorted(corr_pairs)) for sl in slices])
        pair_fail = {}
        corr_vals = {}
        n_runs = 0
        branch_dev = 0.0
        for pf, cv, nr, bd in parts:
            for k, v in pf.items():
                pair_fail[k] = pair_fail.get(k, 0.0) + v
            corr_vals.update(cv)
            n_runs += nr
            branch_dev = max(branch_dev, bd)
    else:
        pair_fail, corr_vals, n_runs, branch_dev = _sweep_worker_range(
            engine, 0, nU, corr_pairs
        )

    # counts per class pair over valid configurations
    pair_count = {}
    cls_of = [e.cls_id for e in events]
    ncls = {}
    for c in cls_of:
        ncls[c] = ncls.get(c, 0) + 1
    for ka in ncls:
        for kb in ncls:
            if ka > kb:
                continue
            if ka == kb:
                tot = ncls[ka] * (ncls[ka] - 1) // 2
            else:
                tot = ncls[ka] * ncls[kb]
            pair_count[_class_pair_key(NOISE_CLASSES[ka], NOISE_CLASSES[kb])] = tot
    # remove same-location combinations (a location fails only once)
    for evs in engine.loc_events.values():
        for a in range(len(evs)):
            for b in range(a + 1, len(evs)):
                key = _class_pair_key(
                    NOISE_CLASSES[evs[a].cls_id], NOISE_CLASSES[evs[b].cls_id]
                )
                pair_count[key] -= 1
                u, v = sorted((evs[a].sig_id, evs[b].sig_id))
                f = corr_vals.get((u, v), 0.0)
                if f:
                    pair_fail[key] = pair_fail.get(key, 0.0) - f

    return CountSweep(
        gate_label=exrec.gate_label,
        n_loc=n_loc,
        single_fail=single_fail,
        single_count=single_count,
        pair_fail=pair_fail,
        pair_count=pair_count,
        branch_dev=max(branch_dev, engine.branch_dev),
        n_runs=n_runs,
    )


_POOL_STATE = {}


def _pool_init(gate_label):
    ex = assemble(gate_label)
    _POOL_STATE["engine"] = ex.engine


def _pool_job(args):
    rows, corr_pairs = args
    engine = _POOL_STATE["engine"]
    corr = set(corr_pairs)
    pair_fail = {}
    corr_vals = {}
    n_runs = 0
    bd = 0.0
    for u in rows:
        pf, cv, nr, b = _sweep_worker_range(engine, u, u + 1, corr)
        for k, v in pf.items():
            pair_fail[k] = pair_fail.get(k, 0.0) + v
        corr_vals.update(cv)
        n_runs += nr
        bd = max(bd, b)
    return pair_fail, corr_vals, n_runs, bd


_SWEEPS = {}


def get_sweep(exrec: ExRec, workers: int = 1) -> CountSweep:
    key = exrec.gate_label
    if key not in _SWEEPS:
        _SWEEPS[key] = run_sweep(exrec, workers=workers)
    return _SWEEPS[key]


def run_fault_config(exrec: ExRec, faults) -> float:
    """Failure probability of an explicit <=2-fault configuration."""
    if len(faults) > 2:
        raise ValueError("counting covers at most two faults")
    locs = [f.location for f in faults]
    if len(set(locs)) != len(locs):
        raise ValueError("faults must sit at distinct locations")
    engine = exrec.engine
    evs = [engine.event_by_fault(f) for f in faults]
    return engine.run_events(evs)


def count(exrec: ExRec, model: NoiseModel, workers: int = 1,
          max_configs: int = None) -> ExRecResult:
    """Exact sum over all 0-, 1-, and 2-fault configurations."""
    if max_configs is not None:
        run_sweep(exrec, workers=workers, max_configs=max_configs)
    return get_sweep(exrec, workers=workers).evaluate(model)


MODEL_FAMILIES = ("uniform", "scaled")


def _family_model(family: str, p: float) -> NoiseModel:
    if family == "uniform":
        return NoiseModel.uniform(p)
    if family == "scaled":
        return NoiseModel.scaled(p)
    raise ValueError(f"model family must be one of {MODEL_FAMILIES}")


def _gate_rate(gate_label: str, family: str, p: float) -> float:
    """The gate's own physical failure rate at CNOT rate p."""
    if family == "uniform":
        return p
    return {"I": p / 10, "H": p / 10, "CNOT": p, "CCZ": 10 * p}[gate_label]


class ThresholdError(RuntimeError):
    pass


def pseudothreshold(exrec: ExRec, family: str = "uniform", workers: int = 1,
                    lo: float = 1e-7, hi: float = 1e-1, rel_tol: float = 1e-3):
    """Solve the break-even conditions by bisection.

    The lower bound solves 1 - P2_succ(p) = p_gate and the upper bound
    P2_fail(p) = p_gate; both are reported in CNOT-rate units.
    """
    sweep = get_sweep(exrec, workers=workers)

    def upper_f(p):
        return sweep.evaluate(_family_model(family, p)).p2_fail - _gate_rate(
            exrec.gate_label, family, p
        )

    def lower_f(p):
        r = sweep.evaluate(_family_model(family, p))
        return (1.0 - r.p2_succ) - _gate_rate(exrec.gate_label, family, p)

    lower = _bisect(lower_f, lo, hi, rel_tol)
    upper = _bisect(upper_f, lo, hi, rel_tol)
    return lower, upper


def _bisect(f, lo, hi, rel_tol, scan: int = 240):
    """Root of the first sign change of f on a geometric grid in [lo, hi].

    The failure polynomials are not monotone (the (1-p)^N factor pulls them
    down at large p), so scan for the first low/high sign flip and bisect
    inside it.
    """
    if f(lo) >= 0:
        raise ThresholdError("already failing at the lower end of the range")
    la, lb = math.log(lo), math.log(hi)
    grid = [la + (lb - la) * k / scan for k in range(scan + 1)]
    a = b = None
    prev = grid[0]
    for g in grid[1:]:
        if f(math.exp(g)) >= 0:
            a, b = prev, g
            break
        prev = g
    if a is None:
        raise ThresholdError(f"no crossing in [{lo:g}, {hi:g}]")
    while b - a > rel_tol:
        mid = 0.5 * (a + b)
        if f(math.exp(mid)) < 0:
            a = mid
        else:
            b = mid
    return math.exp(0.5 * (a + b))


def curve_export(exrec: ExRec, family: str, grid, workers: int = 1):
    """Rows (p, p2_fail, 1 - p2_succ) for the logical-error-rate curves."""
    sweep = get_sweep(exrec, workers=workers)
    rows = []
    for p in grid:
        r = sweep.evaluate(_family_model(family, p))
        rows.append((p, r.p2_fail, 1.0 - r.p2_succ))
    return rows
