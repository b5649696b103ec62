"""Exact-diagonalisation ground states and their MPS targets."""

from __future__ import annotations

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..errors import NumericalError, ResourceError
from ..mps import from_statevector, to_statevector
from .hamiltonians import HamiltonianSpec, build_hamiltonian

DENSE_MAX_DIM = 2**10
RESIDUAL_TOL = 1e-8


def ground_state(h, seed: int = 0) -> tuple[float, np.ndarray]:
    """Lowest eigenpair; dense ``eigh`` up to ``2^10``, Lanczos (``eigsh``) above.

    The vector's global phase is fixed so its largest-magnitude entry is real
    positive.
    """
    dim = h.shape[0]
    if dim > 2**16:
        raise ResourceError(f"dimension {dim} exceeds 2^16")
    if dim <= DENSE_MAX_DIM:
        dense = h.toarray() if scipy.sparse.issparse(h) else np.asarray(h)
        w, v = np.linalg.eigh(dense)
        energy, vec = float(w[0]), v[:, 0]
    else:
        v0 = np.random.default_rng(seed).standard_normal(dim).astype(np.complex128)
        try:
            w, v = scipy.sparse.linalg.eigsh(h, k=1, which="SA", v0=v0, tol=1e-13, maxiter=20 * dim)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise NumericalError(f"Lanczos did not converge: {exc}") from exc
        energy, vec = float(w[0]), v[:, 0]
    vec = vec / np.linalg.norm(vec)
    pivot = vec[np.argmax(np.abs(vec))]
    vec = vec * (abs(pivot) / pivot)
    residual = float(np.linalg.norm(h @ vec - energy * vec))
    if residual > RESIDUAL_TOL:
        raise NumericalError(f"ground state residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")
    return energy, vec


def target_mps(spec: HamiltonianSpec, chi_target: int, thresh: float = 0.0):
    """Ground state compressed to bond ``chi_target``.

    Returns ``(mps, info)`` with the energy and the compression fidelity against
    the exact vector.
    """
    energy, vec = ground_state(build_hamiltonian(spec), seed=spec.seed)
    psi = from_statevector(vec, chi_target, thresh)
    fid = float(abs(np.vdot(vec, to_statevector(psi))) ** 2)
    return psi, {"energy": energy, "compression_fidelity": fid, "chi": psi.chi}
