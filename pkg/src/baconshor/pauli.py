"""Exact symbolic algebra for Pauli strings, diagonal-Clifford frames, and
phase-coherent Pauli sums.

Conventions
-----------
A Pauli string is stored in the normal form ``i^phase * X(x) * Z(z)`` where
``x`` and ``z`` are bitmasks over qubits and ``phase`` is an integer mod 4
(a power of i).  A single-qubit Y is ``i * X * Z``.  Phases are tracked
exactly as powers of i; no floating point enters the group algebra.

A :class:`DiagonalCliffordFrame` extends this with a set of CZ factors,
``i^phase * X(x) * Z(z) * prod_{(a,b) in cz} CZ(a,b)``.  The frame group is
closed under multiplication and under conjugation by X, Z, H, CNOT, CZ and
CCZ, which is exactly what propagating errors through the gadget circuits
requires.  CZ factors square to identity, so the cz set is a toggle set.

A :class:`PauliSum` is a complex-weighted sum of phase-stripped Pauli
strings; the phase of each term is folded into its coefficient.  Sums are
what measurements split.

All values are immutable after construction; operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence


def _popcount(v: int) -> int:
    return bin(v).count("1")


class SizeMismatchError(ValueError):
    """Operands act on different numbers of qubits."""


class UnsupportedConjugationError(ValueError):
    """Gate/frame combination outside the supported closure."""


@dataclass(frozen=True)
class PauliString:
    """Signed n-qubit Pauli operator in symplectic form."""

    n: int
    x: int = 0
    z: int = 0
    phase: int = 0  # power of i, mod 4

    def __post_init__(self):
        mask = (1 << self.n) - 1
        if (self.x & ~mask) or (self.z & ~mask):
            raise SizeMismatchError("bitmask exceeds qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        """Build from a string like ``"XIZY"`` (qubit 0 is the leftmost)."""
        x = z = 0
        ph = phase
        for q, ch in enumerate(label.upper()):
            if ch == "I":
                continue
            if ch == "X":
                x |= 1 << q
            elif ch == "Z":
                z |= 1 << q
            elif ch == "Y":
                x |= 1 << q
                z |= 1 << q
                ph += 1  # Y = i * X * Z
            else:
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(len(label), x, z, ph)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PauliString":
        label = ["I"] * n
        label[qubit] = kind
        return cls.from_label("".join(label))

    # -- queries -----------------------------------------------------------

    def to_label(self) -> str:
        chars = []
        n_y = 0
        for q in range(self.n):
            xb = (self.x >> q) & 1
            zb = (self.z >> q) & 1
            if xb and zb:
                chars.append("Y")
                n_y += 1
            elif xb:
                chars.append("X")
            elif zb:
                chars.append("Z")
            else:
                chars.append("I")
        head = {0: "", 1: "i", 2: "-", 3: "-i"}[(self.phase - n_y) % 4]
        return head + "".join(chars)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def is_hermitian(self) -> bool:
        # i^p X(x) Z(z) is Hermitian iff p == |x & z| (mod 2)
        return (self.phase - _popcount(self.x & self.z)) % 2 == 0

    def support(self) -> int:
        return self.x | self.z

    # -- algebra -----------------------------------------------------------

    def inverse(self) -> "PauliString":
        # (i^p X Z)^-1 = i^{-p} Z X = i^{-p} (-1)^{|x&z|} X Z
        return PauliString(
            self.n, self.x, self.z, -self.phase + 2 * _popcount(self.x & self.z)
        )

    def __repr__(self):
        return f"PauliString({self.to_label()!r})"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact Pauli-group product a*b (a applied after b)."""
    if a.n != b.n:
        raise SizeMismatchError(f"{a.n} != {b.n}")
    # X(xa) Z(za) X(xb) Z(zb) = (-1)^{|za & xb|} X(xa^xb) Z(za^zb)
    phase = a.phase + b.phase + 2 * _popcount(a.z & b.x)
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the symplectic inner product of a and b vanishes."""
    if a.n != b.n:
        raise SizeMismatchError(f"{a.n} != {b.n}")
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


@dataclass(frozen=True)
class DiagonalCliffordFrame:
    """Product of an X string with a phase-bearing diagonal part.

    ``i^phase * X(x) * Z(z) * prod CZ(a,b)`` with ``cz`` a frozenset of
    ordered pairs ``(a, b)``, ``a < b``.
    """

    n: int
    x: int = 0
    z: int = 0
    cz: frozenset = field(default_factory=frozenset)
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase", self.phase % 4)
        norm = frozenset(tuple(sorted(p)) for p in self.cz)
        if any(a == b for a, b in norm):
            raise ValueError("CZ pair on a single qubit")
        object.__setattr__(self, "cz", norm)

    @classmethod
    def from_pauli(cls, p: PauliString) -> "DiagonalCliffordFrame":
        return cls(p.n, p.x, p.z, frozenset(), p.phase)

    def is_pauli(self) -> bool:
        return not self.cz

    def to_pauli(self) -> PauliString:
        if self.cz:
            raise ValueError("frame carries CZ factors")
        return PauliString(self.n, self.x, self.z, self.phase)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0 and not self.cz

    def support(self) -> int:
        s = self.x | self.z
        for a, b in self.cz:
            s |= (1 << a) | (1 << b)
        return s

    def __repr__(self):
        czs = ",".join(f"CZ({a},{b})" for a, b in sorted(self.cz))
        return (
            f"Frame(i^{self.phase} x={self.x:b} z={self.z:b}"
            + (f" {czs}" if czs else "")
            + ")"
        )


def _conjugate_diag_by_x(z: int, cz: frozenset, xmask: int) -> tuple[int, int, frozenset]:
    """Return (phase_add, z', cz') for X(xmask) * D * X(xmask), D = Z(z)*CZs."""
    phase = 2 * _popcount(z & xmask)
    z_new = z
    for (a, b) in cz:
        a_hit = (xmask >> a) & 1
        b_hit = (xmask >> b) & 1
        if a_hit and b_hit:
            # X_a X_b CZ X_a X_b = - Z_a Z_b CZ
            phase += 2
            z_new ^= (1 << a) | (1 << b)
        elif a_hit:
            z_new ^= 1 << b
        elif b_hit:
            z_new ^= 1 << a
    return phase, z_new, cz


def frame_multiply(f1: DiagonalCliffordFrame, f2: DiagonalCliffordFrame) -> DiagonalCliffordFrame:
    """Exact product f1*f2 (f1 applied after f2)."""
    if f1.n != f2.n:
        raise SizeMismatchError(f"{f1.n} != {f2.n}")
    # f1 f2 = i^{p1+p2} X(x1) D1 X(x2) D2
    #       = i^{p1+p2} X(x1) X(x2) [X(x2) D1 X(x2)] D2
    ph, z1p, cz1 = _conjugate_diag_by_x(f1.z, f1.cz, f2.x)
    return DiagonalCliffordFrame(
        f1.n,
        f1.x ^ f2.x,
        z1p ^ f2.z,
        cz1 ^ f2.cz,
        f1.phase + f2.phase + ph,
    )


def frame_inverse(f: DiagonalCliffordFrame) -> DiagonalCliffordFrame:
    """Inverse of a frame: D^-1 X(x) i^{-p} renormalized to X-left form."""
    ph, zp, czp = _conjugate_diag_by_x(f.z, f.cz, f.x)
    # f^-1 = i^{-p} D^dag X(x); D^dag = D for the Z/CZ part (real diagonal),
    # and D X = X (X D X), so reuse the X-conjugation of the diagonal.
    return DiagonalCliffordFrame(f.n, f.x, zp, czp, -f.phase + ph)


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def conjugate(gate, f: DiagonalCliffordFrame) -> DiagonalCliffordFrame:
    """Conjugate a frame by a gate: returns g * f * g^dag.

    ``gate`` needs ``kind`` and ``qubits`` attributes (a GateSpec works), or
    may be a ``(kind, qubits)`` tuple.  Supported kinds: X, Z, H, CNOT, CZ,
    CCZ and CkZ.  H is only supported when the frame carries no CZ factor on
    the H qubit (the gadget circuits never create that combination, and the
    result would leave the frame group).
    """
    if isinstance(gate, tuple):
        kind, qubits = gate
    else:
        kind, qubits = gate.kind, gate.qubits
    n = f.n
    for q in qubits:
        if not (0 <= q < n):
            raise SizeMismatchError(f"qubit {q} outside frame of {n}")

    if kind == "X":
        (q,) = qubits
        m = 1 << q
        ph, z_new, cz = _conjugate_diag_by_x(f.z, f.cz, m)
        return DiagonalCliffordFrame(n, f.x, z_new, cz, f.phase + ph)
    if kind == "Z":
        (q,) = qubits
        m = 1 << q
        return DiagonalCliffordFrame(
            n, f.x, f.z, f.cz, f.phase + 2 * ((f.x >> q) & 1)
        )
    if kind == "H":
        (q,) = qubits
        m = 1 << q
        if any(q in pr for pr in f.cz):
            raise UnsupportedConjugationError(
                "H meeting a CZ factor on its qubit leaves the frame group"
            )
        xb, zb = (f.x >> q) & 1, (f.z >> q) & 1
        x_new = (f.x & ~m) | (zb << q)
        z_new = (f.z & ~m) | (xb << q)
        # H (XZ) H = ZX = -XZ
        return DiagonalCliffordFrame(n, x_new, z_new, f.cz, f.phase + 2 * (xb & zb))
    if kind == "CNOT":
        c, t = qubits
        x, z = f.x, f.z
        if (x >> c) & 1:
            x ^= 1 << t
        if (z >> t) & 1:
            z ^= 1 << c
        # CZ factors: conjugating CZ(t, u) by CNOT(c, t) gives CZ(t,u) CZ(c,u);
        # a CZ on the control qubit commutes with the Z-basis control.
        cz = set(f.cz)
        for (a, b) in f.cz:
            if a == t or b == t:
                u = b if a == t else a
                if u == c:
                    # CZ(c,t) -> CZ(c,t) Z(c)  [substitute z_t -> z_t ^ z_c]
                    z ^= 1 << c
                else:
                    p = _pair(c, u)
                    cz.discard(p) if p in cz else cz.add(p)
        return DiagonalCliffordFrame(n, x, z, frozenset(cz), f.phase)
    if kind == "CZ":
        a, b = qubits
        xa, xb = (f.x >> a) & 1, (f.x >> b) & 1
        z = f.z
        phase = f.phase
        if xa and xb:
            phase += 2
            z ^= (1 << a) | (1 << b)
        elif xa:
            z ^= 1 << b
        elif xb:
            z ^= 1 << a
        return DiagonalCliffordFrame(n, f.x, z, f.cz, phase)
    if kind in ("CCZ", "CkZ"):
        s = [q for q in qubits if (f.x >> q) & 1]
        if not s:
            return f
        # X(s) pulled through C^kZ spawns the diagonal with GF(2) phase
        # polynomial prod(u + s) + prod(u) over the gate support.  Expand
        # into monomials: subsets (supp \ s) | R for R a proper subset of
        # (supp & s); the empty monomial is a global -1.
        hit = s
        rest = [q for q in qubits if q not in hit]
        z = f.z
        cz = set(f.cz)
        phase = f.phase
        for r_mask in range(1 << len(hit)):
            if r_mask == (1 << len(hit)) - 1:
                continue  # the full product cancels against prod(u)
            mono = list(rest) + [hit[i] for i in range(len(hit)) if (r_mask >> i) & 1]
            if len(mono) == 0:
                phase += 2
            elif len(mono) == 1:
                z ^= 1 << mono[0]
            elif len(mono) == 2:
                p = _pair(*mono)
                cz.discard(p) if p in cz else cz.add(p)
            else:
                raise UnsupportedConjugationError(
                    "conjugation spawned a >2-qubit diagonal monomial; "
                    "frames only close under gates with k <= 2 controls "
                    "meeting X on enough qubits"
                )
        return DiagonalCliffordFrame(n, f.x, z, frozenset(cz), phase)
    raise UnsupportedConjugationError(f"unsupported gate kind {kind!r}")


class PauliSum:
    """Phase-coherent complex-weighted sum of phase-stripped Pauli strings.

    Terms are keyed by ``(x, z)`` with the i^phase of each Pauli folded into
    its complex coefficient.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Optional[dict] = None):
        self.n = n
        self.terms = dict(terms) if terms else {}

    @classmethod
    def from_frame(cls, f: DiagonalCliffordFrame) -> "PauliSum":
        return expand(f)

    def norm_sq(self) -> float:
        return sum(abs(c) ** 2 for c in self.terms.values())

    def items(self):
        return self.terms.items()

    def __len__(self):
        return len(self.terms)

    def scaled(self, s: complex) -> "PauliSum":
        return PauliSum(self.n, {k: c * s for k, c in self.terms.items()})

    def __repr__(self):
        body = ", ".join(
            f"{c:+.3f}*{PauliString(self.n, x, z).to_label()}"
            for (x, z), c in sorted(self.terms.items())
        )
        return f"PauliSum({body})"


_I4 = (1, 1j, -1, -1j)


def expand(f: DiagonalCliffordFrame) -> PauliSum:
    """Expand the CZ factors of a frame into a normalized Pauli sum.

    Uses CZ = (I + Z_a + Z_b - Z_a Z_b)/2 per pair; with c disjoint pairs
    this yields 2^c nonzero terms, and sum |a|^2 = 1 always.
    """
    terms = {(f.x, f.z): complex(_I4[f.phase])}
    for (a, b) in sorted(f.cz):
        za, zb = 1 << a, 1 << b
        new: dict = {}
        for (x, z), c in terms.items():
            half = c / 2.0
            # Z factors append to the right of X(x)Z(z) and commute with the
            # Z part, so terms stay in normal form with no extra sign.
            for dz, sgn in ((0, 1), (za, 1), (zb, 1), (za | zb, -1)):
                key = (x, z ^ dz)
                amp = sgn * half
                prev = new.get(key)
                new[key] = amp if prev is None else prev + amp
        terms = {k: c for k, c in new.items() if c != 0}
    return PauliSum(f.n, terms)


class GroupReducer:
    """Canonical reduction of Paulis modulo a signed Pauli group.

    Generators carry their sign (the group element acts as +1 on the state
    they stabilize); reduction expresses a Pauli as ``i^k * g * canonical``
    with ``g`` in the group, returning the canonical form and the exact
    phase ``i^k`` relative to it.

    ``priority`` optionally orders bit elimination (coordinates listed first
    are cleared first), which keeps canonical forms supported on preferred
    coordinates.
    """

    def __init__(self, n: int, generators: Iterable[PauliString], priority: Optional[Sequence[int]] = None):
        self.n = n
        order = list(priority) if priority is not None else list(range(n))
        order += [q for q in range(n) if q not in set(order)]
        # bit positions: x-bit of qubit q at 2q, z-bit at 2q+1, in priority order
        self._bitpos = []
        for q in order:
            self._bitpos.append(("x", q))
            self._bitpos.append(("z", q))
        self.rows: list[tuple] = []  # (pivot_index, PauliString)
        for g in generators:
            self._insert(g)

    @staticmethod
    def _get_bit(p: PauliString, which: str, q: int) -> int:
        v = p.x if which == "x" else p.z
        return (v >> q) & 1

    def _leading(self, p: PauliString) -> int:
        for i, (which, q) in enumerate(self._bitpos):
            if self._get_bit(p, which, q):
                return i
        return -1

    def _insert(self, g: PauliString):
        for piv, row in self.rows:
            which, q = self._bitpos[piv]
            if self._get_bit(g, which, q):
                g = multiply(g, row)
        lead = self._leading(g)
        if lead < 0:
            if g.phase % 4 != 0:
                raise ValueError("inconsistent signed generating set (got -I or +-iI)")
            return  # redundant generator
        self.rows.append((lead, g))
        self.rows.sort(key=lambda r: r[0])

    def reduce(self, p: PauliString) -> PauliString:
        """Canonical representative of p's coset, with exact relative phase."""
        for piv, row in self.rows:
            which, q = self._bitpos[piv]
            if self._get_bit(p, which, q):
                p = multiply(p, row)
        return p

    def contains(self, p: PauliString) -> bool:
        """Membership up to sign (the x/z pattern lies in the group span)."""
        return self.reduce(p).is_identity()

    def phase_of(self, p: PauliString):
        """If p = i^k * g for g in the signed group, return i^k, else None."""
        r = self.reduce(p)
        if not r.is_identity():
            return None
        return _I4[r.phase]


def split_measurement(e: PauliSum, observable: PauliString, frame_group: Optional[GroupReducer] = None):
    """Split a Pauli sum by a Hermitian Pauli measurement.

    Returns ``((sum_plus, p_plus), (sum_minus, p_minus))`` where the plus
    branch collects terms commuting with the observable (outcome agreeing
    with the ideal one) and the minus branch the anticommuting terms.

    Branch probabilities follow the amplitude-sum rule: terms whose product
    lies in the supplied stabilizer-plus-fixed-gauge group are degenerate
    and their amplitudes add coherently (with the exact relative sign from
    the group reduction); inequivalent terms contribute incoherently.  With
    no group, every distinct phase-stripped Pauli is its own class.

    Branch sums are renormalized to unit norm.
    """
    if observable.n != e.n:
        raise SizeMismatchError(f"{observable.n} != {e.n}")
    if not observable.is_hermitian():
        raise ValueError("observable must be a Hermitian Pauli")
    branches = ({}, {})  # canonical-term dicts for +1 / -1
    for (x, z), c in e.terms.items():
        p = PauliString(e.n, x, z)
        comm = (
            _popcount(x & observable.z) + _popcount(z & observable.x)
        ) % 2 == 0
        if frame_group is not None:
            r = frame_group.reduce(p)
            key, amp = (r.x, r.z), c * _I4[r.phase]
        else:
            key, amp = (x, z), c
        d = branches[0 if comm else 1]
        d[key] = d.get(key, 0) + amp
    out = []
    for d in branches:
        d = {k: v for k, v in d.items() if abs(v) > 1e-15}
        prob = sum(abs(v) ** 2 for v in d.values())
        if prob > 0:
            scale = prob ** -0.5
            d = {k: v * scale for k, v in d.items()}
        out.append((PauliSum(e.n, d), prob))
    return out[0], out[1]
