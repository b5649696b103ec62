"""Dense statevector simulation, used as an independent oracle for small ``n``.

Qubit 0 is the most significant bit of the basis index. The gate kernel has a
numba version and a numpy version; ``apply_two_qubit`` dispatches on
``schmidtprep._accel.USE_NUMBA``.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from .errors import ResourceError, ValidationError

MAX_QUBITS = 24


def _apply_two_qubit_numpy(vec: np.ndarray, u: np.ndarray, i: int, n: int) -> np.ndarray:
    psi = vec.reshape(2**i, 4, 2 ** (n - i - 2))
    return np.einsum("ab,lbr->lar", u, psi).reshape(-1)


@_accel.njit(cache=True)
def _apply_two_qubit_loops(vec, u, i, n):
    out = np.empty_like(vec)
    stride = 1 << (n - i - 2)
    high = 1 << i
    for h in range(high):
        base = h * 4 * stride
        for lo in range(stride):
            a0 = vec[base + lo]
            a1 = vec[base + stride + lo]
            a2 = vec[base + 2 * stride + lo]
            a3 = vec[base + 3 * stride + lo]
            for r in range(4):
                out[base + r * stride + lo] = u[r, 0] * a0 + u[r, 1] * a1 + u[r, 2] * a2 + u[r, 3] * a3
    return out


def apply_two_qubit(vec: np.ndarray, u: np.ndarray, i: int, n: int) -> np.ndarray:
    """Apply a 4x4 gate to qubits ``(i, i+1)`` of an ``n``-qubit statevector."""
    if n > MAX_QUBITS:
        raise ResourceError(f"dense simulation limited to {MAX_QUBITS} qubits")
    if not 0 <= i < n - 1:
        raise ValidationError(f"gate position {i} outside 0..{n - 2}")
    vec = np.ascontiguousarray(vec, dtype=np.complex128)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if _accel.USE_NUMBA:
        return _apply_two_qubit_loops(vec, u, i, n)
    return _apply_two_qubit_numpy(vec, u, i, n)


def apply_layer_dense(vec: np.ndarray, mats, adjoint: bool = False) -> np.ndarray:
    n = len(mats) + 1
    order = range(n - 2, -1, -1) if adjoint else range(n - 1)
    for k in order:
        u = mats[k].conj().T if adjoint else mats[k]
        vec = apply_two_qubit(vec, u, k, n)
    return vec


def apply_circuit_dense(vec: np.ndarray, circuit) -> np.ndarray:
    for layer, adj in circuit.layers:
        vec = apply_layer_dense(vec, layer.unitaries, adj)
    return vec


def zero_vector(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=np.complex128)
    v[0] = 1.0
    return v


def bipartition_singular_values(vec: np.ndarray, cut: int) -> np.ndarray:
    """Schmidt coefficients between qubits ``0..cut`` and ``cut+1..n-1``."""
    return np.linalg.svd(np.asarray(vec).reshape(2 ** (cut + 1), -1), compute_uv=False)
