"""Dense-matrix and statevector oracles used to pin expected values.

Everything here is independent of the package's symplectic algebra: Paulis
and gates are built as explicit numpy matrices (qubit 0 is the least
significant axis), and stabilizer states as projector products.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def dense_pauli(p) -> np.ndarray:
    """Matrix of a PauliString (i^phase X(x) Z(z) normal form)."""
    M = np.array([[1.0 + 0j]])
    for q in range(p.n):
        xb, zb = (p.x >> q) & 1, (p.z >> q) & 1
        m = X @ Z if (xb and zb) else (X if xb else (Z if zb else I2))
        M = np.kron(m, M)
    return (1j) ** p.phase * M


def dense_frame(f) -> np.ndarray:
    from baconshor.pauli import PauliString

    M = dense_pauli(PauliString(f.n, f.x, f.z, f.phase))
    for (a, b) in f.cz:
        D = np.ones(1 << f.n, dtype=complex)
        for v in range(1 << f.n):
            if (v >> a) & 1 and (v >> b) & 1:
                D[v] = -1
        M = M @ np.diag(D)
    return M


def dense_gate(kind: str, qubits, n: int) -> np.ndarray:
    if kind == "CNOT":
        c, t = qubits
        U = np.zeros((1 << n, 1 << n), dtype=complex)
        for v in range(1 << n):
            U[v ^ (((v >> c) & 1) << t), v] = 1
        return U
    if kind == "H":
        (q,) = qubits
        M = np.array([[1.0 + 0j]])
        for i in range(n):
            M = np.kron(H if i == q else I2, M)
        return M
    if kind in ("X", "Z"):
        M = np.array([[1.0 + 0j]])
        base = X if kind == "X" else Z
        for i in range(n):
            M = np.kron(base if i == qubits[0] else I2, M)
        return M
    # the controlled-Z family is diagonal
    D = np.ones(1 << n, dtype=complex)
    for v in range(1 << n):
        if all((v >> q) & 1 for q in qubits):
            D[v] = -1
    return np.diag(D)


def sum_to_matrix(s) -> np.ndarray:
    from baconshor.pauli import PauliString

    M = np.zeros((1 << s.n, 1 << s.n), dtype=complex)
    for (x, z), c in s.items():
        M += c * dense_pauli(PauliString(s.n, x, z))
    return M


def stabilizer_state(n: int, generators) -> np.ndarray:
    """Normalized statevector stabilized by the given signed Paulis."""
    P = np.eye(1 << n, dtype=complex)
    for g in generators:
        P = P @ (np.eye(1 << n) + dense_pauli(g)) / 2
    # any nonzero column of the projector spans the state (rank 1 expected)
    for col in range(1 << n):
        v = P[:, col]
        nrm = np.linalg.norm(v)
        if nrm > 1e-9:
            return v / nrm
    raise ValueError("projector vanished; inconsistent generators")
