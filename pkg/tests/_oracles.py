"""Dense reference implementations, written independently of the package internals."""

import numpy as np

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def mps_to_dense(tensors):
    """Explicit index sum, qubit 0 most significant."""
    n = len(tensors)
    out = np.zeros(2**n, dtype=complex)
    for idx in range(2**n):
        bits = [(idx >> (n - 1 - j)) & 1 for j in range(n)]
        m = np.eye(1)
        for t, b in zip(tensors, bits):
            m = m @ t[:, b, :]
        out[idx] = m[0, 0]
    return out


def embed(u, i, n):
    """Full ``2^n`` matrix of a two-qubit gate on qubits ``(i, i+1)``."""
    return np.kron(np.kron(np.eye(2**i), u), np.eye(2 ** (n - i - 2)))


def dense_layer(vec, mats, adjoint=False):
    n = len(mats) + 1
    order = range(n - 2, -1, -1) if adjoint else range(n - 1)
    for k in order:
        u = mats[k].conj().T if adjoint else mats[k]
        vec = embed(u, k, n) @ vec
    return vec


def dense_circuit(circuit):
    vec = np.zeros(2**circuit.n, dtype=complex)
    vec[0] = 1.0
    for layer, adj in circuit.layers:
        vec = dense_layer(vec, layer.unitaries, adj)
    return vec


def bond_singular_values(vec, n, bond):
    """Schmidt values between qubits ``0..bond`` and the rest."""
    return np.linalg.svd(vec.reshape(2 ** (bond + 1), -1), compute_uv=False)


def pauli_string(ops, n):
    """Kronecker product for ``{site: 'X'|'Y'|'Z'}``."""
    m = np.eye(1)
    for j in range(n):
        m = np.kron(m, PAULI[ops.get(j, "I")])
    return m


def central_fd(f, x, step=1e-5):
    g = np.zeros_like(x)
    for a in range(x.size):
        e = np.zeros_like(x)
        e[a] = step
        g[a] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def grad_agrees(analytic, fd, rel=1e-4, floor=1e-8):
    """Componentwise ``|a - f| <= rel * max(|a|, |f|, floor)``."""
    analytic, fd = np.ravel(analytic), np.ravel(fd)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), floor)
    err = np.abs(analytic - fd)
    return bool(np.all(err <= rel * scale)), float(np.max(err / scale))


def haar_unitary(dim, rng):
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
