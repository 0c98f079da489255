"""Pauli algebra against dense-matrix and statevector oracles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from baconshor.pauli import (
    DiagonalCliffordFrame,
    GroupReducer,
    PauliString,
    SizeMismatchError,
    UnsupportedConjugationError,
    commutes,
    conjugate,
    expand,
    frame_inverse,
    frame_multiply,
    multiply,
    split_measurement,
)

from oracles import dense_frame, dense_gate, dense_pauli, stabilizer_state

LABELS1 = ["I", "X", "Y", "Z"]


def labels(n):
    return ("".join(t) for t in itertools.product(LABELS1, repeat=n))


def test_multiply_single_qubit_relations():
    # X * Z = -iY
    r = multiply(PauliString.from_label("XI"), PauliString.from_label("ZI"))
    assert r.to_label() == "-iYI"
    # P * P = +I for Hermitian P
    for lab in ("X", "Y", "Z"):
        p = PauliString.from_label(lab)
        assert multiply(p, p).to_label() == "I"


def test_multiply_two_qubit_against_dense():
    # includes the (X0 Z1)(Z0 X1) example; the dense product fixes the phase
    for a in labels(2):
        for b in labels(2):
            pa, pb = PauliString.from_label(a), PauliString.from_label(b)
            got = dense_pauli(multiply(pa, pb))
            want = dense_pauli(pa) @ dense_pauli(pb)
            assert np.allclose(got, want), (a, b)
    r = multiply(PauliString.from_label("XZ"), PauliString.from_label("ZX"))
    assert np.allclose(
        dense_pauli(r),
        dense_pauli(PauliString.from_label("XZ"))
        @ dense_pauli(PauliString.from_label("ZX")),
    )
    assert r.to_label() == "YY"  # phase +1 by the dense oracle


def test_multiply_associative_on_two_qubits():
    ps = [PauliString.from_label(l) for l in labels(2)]
    rng = np.random.default_rng(7)
    for _ in range(300):
        a, b, c = (ps[rng.integers(len(ps))] for _ in range(3))
        assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))


def test_multiply_size_mismatch():
    with pytest.raises(SizeMismatchError):
        multiply(PauliString.from_label("X"), PauliString.from_label("XX"))


def test_commutes_examples():
    X0 = PauliString.from_label("XI")
    Z0 = PauliString.from_label("ZI")
    Z1 = PauliString.from_label("IZ")
    assert not commutes(X0, Z0)
    assert commutes(X0, Z1)
    assert commutes(PauliString.from_label("XX"), PauliString.from_label("ZZ"))


GATES3 = [
    ("X", (0,)),
    ("Z", (1,)),
    ("H", (2,)),
    ("CNOT", (0, 1)),
    ("CNOT", (2, 0)),
    ("CZ", (0, 2)),
    ("CCZ", (0, 1, 2)),
]


def test_conjugate_exhaustive_paulis_3q():
    """Every supported gate against the dense g P g^dag on all 3-qubit Paulis."""
    for kind, qubits in GATES3:
        U = dense_gate(kind, qubits, 3)
        for lab in labels(3):
            f = DiagonalCliffordFrame.from_pauli(PauliString.from_label(lab))
            g = conjugate((kind, qubits), f)
            assert np.allclose(dense_frame(g), U @ dense_frame(f) @ U.conj().T), (
                kind, qubits, lab,
            )


def test_conjugate_ccz_propagation_rules():
    n = 3
    fx = DiagonalCliffordFrame(n, x=1)  # X on the first node
    g = conjugate(("CCZ", (0, 1, 2)), fx)
    assert g.x == 1 and g.z == 0 and g.cz == frozenset({(1, 2)})
    fz = DiagonalCliffordFrame(n, z=1)  # Z commutes through
    assert conjugate(("CCZ", (0, 1, 2)), fz) == fz
    fxx = DiagonalCliffordFrame(2, x=0b11)
    g = conjugate(("CZ", (0, 1)), fxx)
    assert np.allclose(
        dense_frame(g),
        dense_gate("CZ", (0, 1), 2) @ dense_frame(fxx) @ dense_gate("CZ", (0, 1), 2),
    )
    assert g.z == 0b11 and g.phase == 2  # X X -> - X X Z Z under CZ


def _random_frame(rng, n, czmax=2):
    pairs = set()
    for _ in range(int(rng.integers(0, czmax + 1))):
        a, b = rng.choice(n, size=2, replace=False)
        pairs.add((min(a, b), max(a, b)))
    return DiagonalCliffordFrame(
        n, int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << n)),
        frozenset(pairs), int(rng.integers(0, 4)),
    )


def test_conjugate_frames_with_cz_against_dense():
    rng = np.random.default_rng(3)
    for _ in range(200):
        f = _random_frame(rng, 3)
        for kind, qubits in GATES3:
            if kind == "H" and any(qubits[0] in pr for pr in f.cz):
                with pytest.raises(UnsupportedConjugationError):
                    conjugate((kind, qubits), f)
                continue
            U = dense_gate(kind, qubits, 3)
            g = conjugate((kind, qubits), f)
            assert np.allclose(dense_frame(g), U @ dense_frame(f) @ U.conj().T)


def test_conjugate_round_trip_1000_trials():
    """g then g^dag returns the original frame (all supported gates are
    self-inverse here)."""
    rng = np.random.default_rng(11)
    for _ in range(1000):
        f = _random_frame(rng, 4, czmax=3)
        kind, qubits = GATES3[int(rng.integers(len(GATES3)))]
        if kind == "H" and any(qubits[0] in pr for pr in f.cz):
            continue
        assert conjugate((kind, qubits), conjugate((kind, qubits), f)) == f


def test_frame_multiply_and_inverse_against_dense():
    rng = np.random.default_rng(5)
    for _ in range(200):
        f1, f2 = _random_frame(rng, 3), _random_frame(rng, 3)
        assert np.allclose(
            dense_frame(frame_multiply(f1, f2)), dense_frame(f1) @ dense_frame(f2)
        )
        assert np.allclose(
            dense_frame(frame_inverse(f1)), np.linalg.inv(dense_frame(f1))
        )


def test_expand_counts_and_unitarity():
    f = DiagonalCliffordFrame(2)
    s = expand(f)
    assert len(s) == 1 and abs(abs(next(iter(s.terms.values()))) - 1) < 1e-12

    f = DiagonalCliffordFrame(2, cz=frozenset({(0, 1)}))
    s = expand(f)
    assert len(s) == 4
    assert all(abs(abs(c) - 0.5) < 1e-12 for c in s.terms.values())

    # X0 CZ(1,2) CZ(3,4): 16 terms, checked against the dense 5-qubit matrix
    f = DiagonalCliffordFrame(5, x=1, cz=frozenset({(1, 2), (3, 4)}))
    s = expand(f)
    assert len(s) == 16
    from oracles import sum_to_matrix

    assert np.allclose(sum_to_matrix(s), dense_frame(f))
    assert abs(s.norm_sq() - 1) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_expand_unitarity_property(seed):
    rng = np.random.default_rng(seed)
    f = _random_frame(rng, 5, czmax=4)
    assert abs(expand(f).norm_sq() - 1) < 1e-12


def test_split_deterministic_on_pauli_frames():
    s = expand(DiagonalCliffordFrame(2, z=0b01))
    obs = PauliString.from_label("IX")
    (sp, pp), (sm, pm) = split_measurement(s, obs)
    assert pp == pytest.approx(1.0) and pm == pytest.approx(0.0)
    obs = PauliString.from_label("XI")  # anticommutes with Z0
    (sp, pp), (sm, pm) = split_measurement(s, obs)
    assert pp == pytest.approx(0.0) and pm == pytest.approx(1.0)


def test_split_uniform_two_term():
    from baconshor.pauli import PauliSum

    s = PauliSum(1, {(0, 0): 1 / np.sqrt(2), (0, 1): 1 / np.sqrt(2)})
    (sp, pp), (sm, pm) = split_measurement(s, PauliString.from_label("X"))
    assert pp == pytest.approx(0.5) and pm == pytest.approx(0.5)
    assert abs(pp + pm - 1) < 1e-12


def test_split_probabilities_match_statevector_toy_code():
    """CZ-expanded error measured by an X observable on a 6-qubit stabilizer
    state, versus the dense statevector."""
    rng = np.random.default_rng(42)
    n = 6
    for _ in range(100):
        gens, frame_group = _random_full_stabilizer_group(rng, n)
        psi = stabilizer_state(n, gens)
        f = _random_frame(rng, n, czmax=3)
        s = expand(f)
        # pick a Hermitian observable from the group so the ideal outcome is
        # deterministic and flips are meaningful
        obs = gens[int(rng.integers(len(gens)))]
        (sp, pp), (sm, pm) = split_measurement(s, obs, frame_group)
        E = dense_frame(f)
        O = dense_pauli(obs)
        Pp = (np.eye(1 << n) + O) / 2
        Pm = (np.eye(1 << n) - O) / 2
        v = E @ psi
        assert abs(pp + pm - 1) < 1e-10
        assert pp == pytest.approx(np.vdot(Pp @ v, Pp @ v).real, abs=1e-9)
        assert pm == pytest.approx(np.vdot(Pm @ v, Pm @ v).real, abs=1e-9)


def _random_full_stabilizer_group(rng, n):
    """A random full-rank stabilizer group built by conjugating Z's through
    random Clifford gates, plus its GroupReducer."""
    gens = [PauliString.single(n, q, "Z") for q in range(n)]
    gates = []
    for _ in range(25):
        kind = ("H", "CNOT", "CZ")[int(rng.integers(3))]
        if kind == "H":
            gates.append((kind, (int(rng.integers(n)),)))
        else:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append((kind, (int(a), int(b))))
    out = []
    for g in gens:
        f = DiagonalCliffordFrame.from_pauli(g)
        for gate in gates:
            f = conjugate(gate, f)
        out.append(f.to_pauli())
    return out, GroupReducer(n, out)


def test_group_reducer_membership_and_phase():
    n = 4
    gens = [
        PauliString.from_label("ZZII"),
        PauliString.from_label("IZZI"),
        PauliString.from_label("XXXX"),
    ]
    red = GroupReducer(n, gens)
    assert red.contains(multiply(gens[0], gens[1]))
    assert not red.contains(PauliString.from_label("ZIII"))
    # -ZZII is in the group only up to sign; phase_of reports the sign
    m = PauliString(4, 0, 0b0011, 2)
    assert red.phase_of(m) == -1


def test_split_branch_sums_renormalized():
    f = DiagonalCliffordFrame(3, x=1, cz=frozenset({(1, 2)}))
    s = expand(f)
    (sp, pp), (sm, pm) = split_measurement(s, PauliString.from_label("IXI"))
    assert abs(pp + pm - 1) < 1e-12
    for branch, prob in ((sp, pp), (sm, pm)):
        if prob > 0:
            assert abs(branch.norm_sq() - 1) < 1e-12
