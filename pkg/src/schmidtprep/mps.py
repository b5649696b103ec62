"""Open-boundary matrix product states of qubits.

Site tensors have legs ``(left, physical, right)``; the boundary bonds have
extent 1. Site 0 is the most significant qubit of the dense statevector, so
``to_statevector`` is a plain row-major contraction.

``MPS.center`` records the orthogonality centre when the state is known to be
in mixed canonical form: tensors left of it are left isometries, tensors right
of it are right isometries. ``center == 0`` is right-canonical and
``center == n - 1`` left-canonical; ``None`` means no canonical form is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, ValidationError
from .tensor_core import DTYPE, qr_thin, svd_descending

MAX_DENSE_SITES = 24


@dataclass
class MPS:
    tensors: list[np.ndarray]
    center: int | None = None
    norm_log: float = 0.0

    def __post_init__(self):
        if not self.tensors:
            raise ValidationError("an MPS needs at least one site")
        self.tensors = [np.asarray(t, dtype=DTYPE) for t in self.tensors]
        check_bonds(self.tensors)
        if self.center is not None and not 0 <= self.center < len(self.tensors):
            raise ValidationError(f"center {self.center} outside 0..{len(self.tensors) - 1}")

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def d(self) -> int:
        return 2

    @property
    def bond_dims(self) -> list[int]:
        """Internal bond extents, ``n - 1`` entries."""
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def chi(self) -> int:
        return max(self.bond_dims, default=1)

    def copy(self) -> "MPS":
        return MPS([t.copy() for t in self.tensors], self.center, self.norm_log)

    def norm(self) -> float:
        return math.sqrt(max(overlap(self, self).real, 0.0))

    def normalized(self) -> "MPS":
        psi = self.copy() if self.center is not None else canonicalize(self, 0)
        c = psi.center
        nrm = np.linalg.norm(psi.tensors[c])
        if nrm == 0:
            raise ValidationError("cannot normalise the zero state")
        psi.tensors[c] = psi.tensors[c] / nrm
        psi.norm_log = 0.0
        return psi


def check_bonds(tensors: list[np.ndarray]) -> None:
    for j, t in enumerate(tensors):
        if t.ndim != 3 or t.shape[1] != 2:
            raise ValidationError(f"site {j}: expected (left, 2, right) tensor, got {t.shape}")
    if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
        raise ValidationError("boundary bond extents must be 1")
    for j in range(len(tensors) - 1):
        if tensors[j].shape[2] != tensors[j + 1].shape[0]:
            raise ValidationError(
                f"bond {j}: right extent {tensors[j].shape[2]} != left extent {tensors[j + 1].shape[0]}"
            )


@dataclass
class SchmidtSpectra:
    """Per-bond Schmidt coefficients, bond ``i`` separating sites ``0..i`` from the rest."""

    spectra: list[np.ndarray]
    sums: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.spectra = [np.asarray(s, dtype=float) for s in self.spectra]
        if not self.sums:
            self.sums = [float(np.sum(s**2)) for s in self.spectra]

    def __len__(self):
        return len(self.spectra)

    def __iter__(self):
        return iter(self.spectra)

    def __getitem__(self, i):
        return self.spectra[i]


def product_state(bits, n: int | None = None) -> MPS:
    """Computational basis state; ``bits`` is a bit string/sequence, or an int with ``n``."""
    if isinstance(bits, (int, np.integer)):
        if n is None:
            raise ValidationError("n is required when bits is an integer")
        bits = [(int(bits) >> (n - 1 - j)) & 1 for j in range(n)]
    tensors = []
    for b in bits:
        t = np.zeros((1, 2, 1), dtype=DTYPE)
        t[0, int(b), 0] = 1.0
        tensors.append(t)
    return MPS(tensors, center=0)


def zero_state(n: int) -> MPS:
    return product_state([0] * n)


def ghz_state(n: int) -> MPS:
    if n < 2:
        raise ValidationError("GHZ needs at least 2 sites")
    tensors = []
    for j in range(n):
        left = 1 if j == 0 else 2
        right = 1 if j == n - 1 else 2
        t = np.zeros((left, 2, right), dtype=DTYPE)
        for b in range(2):
            t[0 if j == 0 else b, b, 0 if j == n - 1 else b] = 1.0
        tensors.append(t)
    tensors[0] = tensors[0] / math.sqrt(2.0)
    return canonicalize(MPS(tensors), 0)


def canonicalize(psi: MPS, center: int) -> MPS:
    """Mixed canonical form with orthogonality centre ``center``; the state is unchanged."""
    n = psi.n
    if not 0 <= center < n:
        raise ValidationError(f"center {center} outside 0..{n - 1}")
    tensors = [t.copy() for t in psi.tensors]
    for j in range(center):
        l, d, r = tensors[j].shape
        q, rr = qr_thin(tensors[j].reshape(l * d, r))
        tensors[j] = q.reshape(l, d, q.shape[1])
        tensors[j + 1] = np.tensordot(rr, tensors[j + 1], axes=(1, 0))
    for j in range(n - 1, center, -1):
        l, d, r = tensors[j].shape
        lo, q = qr_thin(tensors[j].reshape(l, d * r), mode="lq")
        tensors[j] = q.reshape(q.shape[0], d, r)
        tensors[j - 1] = np.tensordot(tensors[j - 1], lo, axes=(2, 0))
    return MPS(tensors, center=center, norm_log=psi.norm_log)


def from_statevector(v, chi_max: int | None = None, thresh: float = 0.0, return_error: bool = False):
    """Successive-SVD construction with per-bond truncation.

    Each bond keeps at most ``chi_max`` coefficients, and only those whose
    normalised value exceeds ``thresh``. The returned state is normalised and
    right-canonical. With ``return_error=True`` the discarded weight is also
    returned; the fidelity with ``v`` equals one minus that weight.
    """
    v = np.asarray(v, dtype=DTYPE).ravel()
    n = int(round(math.log2(v.size))) if v.size else 0
    if v.size < 2 or 2**n != v.size:
        raise ValidationError(f"statevector length {v.size} is not a power of two >= 2")
    if n > MAX_DENSE_SITES:
        raise ResourceError(f"n={n} exceeds the dense limit of {MAX_DENSE_SITES} sites")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-8:
        raise ValidationError(f"statevector norm {nrm:.3e} is not 1 within 1e-8")
    if chi_max is not None and chi_max < 1:
        raise ValidationError("chi_max must be >= 1")

    tensors = []
    rest = v.reshape(1, -1)
    discarded = 0.0
    left = 1
    for _ in range(n - 1):
        m = rest.reshape(left * 2, -1)
        u, s, vh = svd_descending(m)
        keep = _keep_count(s, chi_max, thresh)
        discarded += float(np.sum(s[keep:] ** 2))
        tensors.append(u[:, :keep].reshape(left, 2, keep))
        rest = s[:keep, None] * vh[:keep]
        left = keep
    tensors.append(rest.reshape(left, 2, 1))
    psi = MPS(tensors, center=n - 1)
    psi = canonicalize(psi, 0).normalized()
    return (psi, discarded) if return_error else psi


def _keep_count(s: np.ndarray, chi_max: int | None, thresh: float) -> int:
    total = math.sqrt(float(np.sum(s**2)))
    if total == 0:
        return 1
    keep = int(np.count_nonzero(s / total > thresh)) if thresh > 0 else int(np.count_nonzero(s > 0))
    if chi_max is not None:
        keep = min(keep, chi_max)
    return max(keep, 1)


def to_statevector(psi: MPS) -> np.ndarray:
    if psi.n > MAX_DENSE_SITES:
        raise ResourceError(f"n={psi.n} exceeds the dense limit of {MAX_DENSE_SITES} sites")
    out = psi.tensors[0].reshape(2, -1)
    for t in psi.tensors[1:]:
        out = (out @ t.reshape(t.shape[0], -1)).reshape(-1, t.shape[2])
    return out.ravel() * math.exp(psi.norm_log)


def schmidt_spectra(psi: MPS) -> SchmidtSpectra:
    """Exact Schmidt coefficients of every bipartition, normalised per bond.

    One left-to-right SVD sweep over the right-canonical form.
    """
    phi = psi if psi.center == 0 else canonicalize(psi, 0)
    spectra = []
    carry = phi.tensors[0]
    for j in range(phi.n - 1):
        l, _, r = carry.shape
        _, s, vh = svd_descending(carry.reshape(l * 2, r))
        nrm = math.sqrt(float(np.sum(s**2)))
        spectra.append(s / nrm if nrm > 0 else s)
        carry = np.tensordot(s[:, None] * vh, phi.tensors[j + 1], axes=(1, 0))
    return SchmidtSpectra(spectra)


def entanglement_entropy(spectra: SchmidtSpectra) -> np.ndarray:
    """Von Neumann entropy per bond (natural log), with ``0 log 0 = 0``."""
    out = []
    for lam in spectra:
        p = np.asarray(lam, dtype=float) ** 2
        p = p[p > 0]
        out.append(float(-np.sum(p * np.log(p))))
    return np.array(out)


def truncate(psi: MPS, chi_max: int | None = None, thresh: float = 0.0) -> tuple[MPS, float]:
    """Compress every bond, returning ``(normalised state, discarded weight)``.

    A single right-to-left SVD sweep over the left-canonical form keeps, per
    bond, the largest coefficients whose normalised value exceeds ``thresh``,
    at most ``chi_max`` of them. Intermediate states are not renormalised, so
    the kept subspaces are nested and the fidelity with the (normalised) input
    is exactly ``1 - discarded``. The output is right-canonical.
    """
    if chi_max is not None and chi_max < 1:
        raise ValidationError("chi_max must be >= 1")
    if thresh < 0:
        raise ValidationError("thresh must be non-negative")
    phi = psi if psi.center == psi.n - 1 else canonicalize(psi, psi.n - 1)
    tensors = list(phi.tensors)
    nrm0 = np.linalg.norm(tensors[-1])
    if nrm0 == 0:
        raise ValidationError("cannot truncate the zero state")
    tensors[-1] = tensors[-1] / nrm0
    discarded = 0.0
    for j in range(psi.n - 1, 0, -1):
        l, _, r = tensors[j].shape
        u, s, vh = svd_descending(tensors[j].reshape(l, 2 * r))
        keep = _keep_count(s, chi_max, thresh)
        discarded += float(np.sum(s[keep:] ** 2))
        tensors[j] = vh[:keep].reshape(keep, 2, r)
        tensors[j - 1] = np.tensordot(tensors[j - 1], u[:, :keep] * s[None, :keep], axes=(2, 0))
    nrm = np.linalg.norm(tensors[0])
    tensors[0] = tensors[0] / nrm
    return MPS(tensors, center=0), discarded


def overlap(a: MPS, b: MPS) -> complex:
    """``<a|b>`` by left-to-right transfer-matrix contraction."""
    if a.n != b.n:
        raise ValidationError(f"overlap of MPS with {a.n} and {b.n} sites")
    env = np.ones((1, 1), dtype=DTYPE)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(env, ta.conj(), axes=(0, 0))  # (b_l, p, a_r)
        env = np.tensordot(env, tb, axes=([0, 1], [0, 1]))  # (a_r, b_r)
    return complex(env[0, 0]) * math.exp(a.norm_log + b.norm_log)


def fidelity(a: MPS, b: MPS) -> float:
    """``|<a|b>|^2`` for states assumed normalised."""
    return abs(overlap(a, b)) ** 2


def random_mps(n: int, chi: int, seed, real_valued: bool = False) -> MPS:
    """Gaussian random MPS, right-canonical and normalised; bonds capped at ``min(chi, 2^j, 2^(n-j))``."""
    if chi < 1:
        raise ValidationError("chi must be >= 1")
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    dims = [1] + [min(chi, 2**j, 2 ** (n - j)) for j in range(1, n)] + [1]
    tensors = []
    for j in range(n):
        shape = (dims[j], 2, dims[j + 1])
        t = rng.standard_normal(shape)
        if not real_valued:
            t = t + 1j * rng.standard_normal(shape)
        tensors.append(t)
    return canonicalize(MPS(tensors), 0).normalized()


def chi_k_fidelity(psi: MPS, k: int) -> float:
    """Fidelity of the sweep-optimal bond-``k`` approximation of the normalised ``psi``."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    _, discarded = truncate(psi, chi_max=k, thresh=0.0)
    return max(0.0, 1.0 - discarded)


def mirror(psi: MPS) -> MPS:
    """Reverse the site order (site ``j`` becomes ``n - 1 - j``)."""
    tensors = [t.transpose(2, 1, 0) for t in reversed(psi.tensors)]
    center = None if psi.center is None else psi.n - 1 - psi.center
    return MPS(tensors, center=center, norm_log=psi.norm_log)
