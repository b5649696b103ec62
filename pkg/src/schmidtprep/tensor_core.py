"""Dense complex linear-algebra substrate.

Every factorisation here is deterministic for fixed input bits:

* ``svd_descending`` rotates each left singular vector so that its
  largest-magnitude entry is real and positive (the matching right vector
  absorbs the conjugate phase).
* ``qr_thin`` returns ``R`` with a non-negative real diagonal.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import NumericalError, ShapeError, ValidationError

DTYPE = np.complex128


def _as_matrix(m, name: str) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be rank-2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def svd_descending(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``m = U @ diag(s) @ Vh`` with ``s`` sorted non-increasing.

    Falls back from LAPACK ``gesdd`` to ``gesvd`` before giving up.
    """
    m = _as_matrix(m, "m")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD did not converge for {m.shape} matrix") from exc
    if u.size:
        # phase convention: largest-magnitude entry of each column of U real positive
        idx = np.argmax(np.abs(u), axis=0)
        pivots = u[idx, np.arange(u.shape[1])]
        mags = np.abs(pivots)
        phases = np.where(mags > 0, pivots / np.where(mags > 0, mags, 1.0), 1.0)
        u = u * phases.conj()[None, :]
        vh = vh * phases[:, None]
    return u, s, vh


def qr_thin(m, mode: str = "qr") -> tuple[np.ndarray, np.ndarray]:
    """Thin QR (``mode="qr"``: ``m = Q R``) or LQ (``mode="lq"``: ``m = L Q``).

    The triangular factor has a non-negative real diagonal. In ``lq`` mode the
    returned pair is ``(L, Q)`` with orthonormal rows in ``Q``.
    """
    m = _as_matrix(m, "m")
    if mode == "lq":
        q, r = qr_thin(m.conj().T, mode="qr")
        return r.conj().T, q.conj().T
    if mode != "qr":
        raise ValidationError(f"unknown QR mode {mode!r}")
    try:
        q, r = np.linalg.qr(m, mode="reduced")
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK QR does not iterate
        raise NumericalError("QR factorisation failed") from exc
    d = np.diagonal(r)
    mags = np.abs(d)
    phases = np.where(mags > 0, d / np.where(mags > 0, mags, 1.0), 1.0)
    q = q * phases[None, :]
    r = r * phases.conj()[:, None]
    return q, r


def contract(a, b, axes: Sequence[tuple[int, int]], names: tuple[str, str] = ("a", "b")) -> np.ndarray:
    """Sum over paired axes ``(axis_of_a, axis_of_b)``; free axes keep their order, ``a`` first."""
    a = np.asarray(a)
    b = np.asarray(b)
    axes = list(axes)
    for ia, ib in axes:
        if a.shape[ia] != b.shape[ib]:
            raise ShapeError(
                f"cannot contract {names[0]}{list(a.shape)} axis {ia} "
                f"with {names[1]}{list(b.shape)} axis {ib}"
            )
    return np.tensordot(a, b, axes=([p[0] for p in axes], [p[1] for p in axes]))


def eigh_hermitian(h, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    h = _as_matrix(h, "h")
    if h.shape[0] != h.shape[1]:
        raise ShapeError(f"h must be square, got {h.shape}")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > tol:
        raise ValidationError("h is not Hermitian within tolerance")
    h = 0.5 * (h + h.conj().T)
    return np.linalg.eigh(h)


def expm_unitary(h) -> np.ndarray:
    """``exp(i h)`` for Hermitian ``h`` via its eigendecomposition."""
    w, v = eigh_hermitian(h)
    return (v * np.exp(1j * w)[None, :]) @ v.conj().T


def expi_divided_differences(w: np.ndarray) -> np.ndarray:
    """Matrix ``F[j, k] = (e^{i w_j} - e^{i w_k}) / (w_j - w_k)`` with the ``i e^{i w_j}`` limit.

    With ``H = V diag(w) V^H`` the differential of ``exp(iH)`` is
    ``V (F * (V^H dH V)) V^H``.
    """
    e = np.exp(1j * w)
    dw = w[:, None] - w[None, :]
    close = np.abs(dw) < 1e-9
    safe = np.where(close, 1.0, dw)
    f = (e[:, None] - e[None, :]) / safe
    # second-order accurate limit for (nearly) coincident eigenvalues
    mid = 0.5 * (w[:, None] + w[None, :])
    return np.where(close, 1j * np.exp(1j * mid), f)
