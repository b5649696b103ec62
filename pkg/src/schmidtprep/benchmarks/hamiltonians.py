"""Benchmark Hamiltonians on open chains, built as sparse matrices from Pauli strings.

Site ``j`` is qubit ``j`` of the MPS, i.e. bit ``n - 1 - j`` of the basis index.
Conventions per family (``S = sigma / 2``):

* ``ising``: ``-J sum Z_i Z_{i+1} - h_x sum X_i``
* ``mbl``: ``J sum (XX + YY + ZZ)_{i,i+1} / 4 + sum h_i Z_i / 2`` with
  ``h_i ~ Normal(0, dh^2)`` drawn from ``seed``
* ``hubbard_spinless``: Jordan-Wigner form of
  ``-t sum (c_i^+ c_{i+1} + h.c.) + V sum n_i n_{i+1} - mu sum n_i``, i.e.
  ``-(t/2) sum (XX + YY) + V sum n_i n_{i+1} - mu sum n_i`` with ``n = (1 - Z) / 2``
* ``heisenberg2d``: ``J sum_<ij> (XX + YY + ZZ) / 4`` on an open ``rows x cols``
  grid flattened by row-serpentine (snake) order
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse

from .. import _accel
from ..errors import ResourceError, ValidationError

MAX_ED_SITES = 16

FAMILIES = ("ising", "mbl", "hubbard_spinless", "heisenberg2d")

DEFAULT_COUPLINGS = {
    "ising": {"J": 1.0, "h_x": 0.5},
    "mbl": {"J": 1.0, "dh": 1.0},
    "hubbard_spinless": {"t": 0.5, "V": 1.0, "mu": 1.0},
    "heisenberg2d": {"J": 1.0},
}


@dataclass
class HamiltonianSpec:
    family: str
    n: int | None = None
    rows: int | None = None
    cols: int | None = None
    couplings: dict = field(default_factory=dict)
    seed: int = 0
    boundary: str = "open"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown model family {self.family!r}; choose from {FAMILIES}")
        if self.boundary != "open":
            raise ValidationError("only open boundary conditions are supported")
        if self.family == "heisenberg2d":
            if not self.rows or not self.cols or self.rows < 1 or self.cols < 1:
                raise ValidationError("heisenberg2d needs positive rows and cols")
            if self.n is not None and self.n != self.rows * self.cols:
                raise ValidationError("n must equal rows * cols")
            self.n = self.rows * self.cols
        elif self.n is None or self.n < 2:
            raise ValidationError(f"{self.family} needs n >= 2")
        merged = dict(DEFAULT_COUPLINGS[self.family])
        merged.update({k: float(v) for k, v in self.couplings.items()})
        unknown = set(merged) - set(DEFAULT_COUPLINGS[self.family])
        if unknown:
            raise ValidationError(f"couplings {sorted(unknown)} do not apply to {self.family}")
        self.couplings = merged

    def to_dict(self) -> dict:
        return asdict(self)


def snake_order(rows: int, cols: int) -> dict[tuple[int, int], int]:
    """Grid site ``(r, c)`` -> chain index, even rows left to right, odd rows reversed."""
    out = {}
    for r in range(rows):
        for c in range(cols):
            out[(r, c)] = r * cols + (c if r % 2 == 0 else cols - 1 - c)
    return out


def snake_inverse(rows: int, cols: int) -> dict[int, tuple[int, int]]:
    return {v: k for k, v in snake_order(rows, cols).items()}


def pauli_terms(spec: HamiltonianSpec) -> list[tuple[float, dict[int, str]]]:
    """``[(coefficient, {site: 'X'|'Y'|'Z'})]``; the empty dict is the identity."""
    c = spec.couplings
    n = spec.n
    terms: list[tuple[float, dict[int, str]]] = []

    def heis(i, j, coef):
        for p in "XYZ":
            terms.append((coef, {i: p, j: p}))

    if spec.family == "ising":
        for i in range(n - 1):
            terms.append((-c["J"], {i: "Z", i + 1: "Z"}))
        for i in range(n):
            terms.append((-c["h_x"], {i: "X"}))
    elif spec.family == "mbl":
        fields = np.random.default_rng(spec.seed).normal(0.0, c["dh"], size=n)
        for i in range(n - 1):
            heis(i, i + 1, c["J"] / 4)
        for i in range(n):
            terms.append((fields[i] / 2, {i: "Z"}))
    elif spec.family == "hubbard_spinless":
        t, v, mu = c["t"], c["V"], c["mu"]
        for i in range(n - 1):
            terms.append((-t / 2, {i: "X", i + 1: "X"}))
            terms.append((-t / 2, {i: "Y", i + 1: "Y"}))
            # V n_i n_{i+1} = V/4 (1 - Z_i - Z_{i+1} + Z_i Z_{i+1})
            terms.append((v / 4, {}))
            terms.append((-v / 4, {i: "Z"}))
            terms.append((-v / 4, {i + 1: "Z"}))
            terms.append((v / 4, {i: "Z", i + 1: "Z"}))
        for i in range(n):
            # -mu n_i = -mu/2 (1 - Z_i)
            terms.append((-mu / 2, {}))
            terms.append((mu / 2, {i: "Z"}))
    elif spec.family == "heisenberg2d":
        idx = snake_order(spec.rows, spec.cols)
        for r in range(spec.rows):
            for col in range(spec.cols):
                if col + 1 < spec.cols:
                    heis(idx[(r, col)], idx[(r, col + 1)], c["J"] / 4)
                if r + 1 < spec.rows:
                    heis(idx[(r, col)], idx[(r + 1, col)], c["J"] / 4)
    return terms


def _masks(terms, n):
    xm = np.zeros(len(terms), dtype=np.int64)
    zm = np.zeros(len(terms), dtype=np.int64)
    ny = np.zeros(len(terms), dtype=np.int64)
    coef = np.zeros(len(terms), dtype=np.float64)
    for a, (cf, ops) in enumerate(terms):
        coef[a] = cf
        for site, p in ops.items():
            bit = 1 << (n - 1 - site)
            if p in "XY":
                xm[a] |= bit
            if p in "YZ":
                zm[a] |= bit
            if p == "Y":
                ny[a] += 1
    return xm, zm, ny, coef


@_accel.njit(cache=True)
def _coo_loops(xm, zm, ny, coef, n):
    dim = 1 << n
    nterms = xm.size
    rows = np.empty(dim * nterms, dtype=np.int64)
    cols = np.empty(dim * nterms, dtype=np.int64)
    vals = np.empty(dim * nterms, dtype=np.complex128)
    iy = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)
    k = 0
    for a in range(nterms):
        phase0 = iy[ny[a] % 4] * coef[a]
        for b in range(dim):
            v = b & zm[a]
            parity = 0
            while v:
                v &= v - 1
                parity ^= 1
            rows[k] = b ^ xm[a]
            cols[k] = b
            vals[k] = -phase0 if parity else phase0
            k += 1
    return rows, cols, vals


def _popcount_parity(v: np.ndarray) -> np.ndarray:
    parity = np.zeros_like(v)
    while np.any(v):
        parity ^= v & 1
        v = v >> 1
    return parity


def _coo_numpy(xm, zm, ny, coef, n):
    dim = 1 << n
    basis = np.arange(dim, dtype=np.int64)
    rows, cols, vals = [], [], []
    for a in range(xm.size):
        phase0 = (1j ** int(ny[a] % 4)) * coef[a]
        sign = 1 - 2 * _popcount_parity(basis & zm[a])
        rows.append(basis ^ xm[a])
        cols.append(basis)
        vals.append(phase0 * sign)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals).astype(np.complex128)


def pauli_sum_to_sparse(terms, n: int, use_numba: bool | None = None) -> scipy.sparse.csr_matrix:
    """Sparse ``2^n x 2^n`` matrix of ``sum_a coef_a P_a``.

    ``P|b> = i^{#Y} (-1)^{popcount(b & zmask)} |b ^ xmask>``.
    """
    if n > MAX_ED_SITES:
        raise ResourceError(f"exact diagonalisation limited to {MAX_ED_SITES} sites, got {n}")
    xm, zm, ny, coef = _masks(terms, n)
    use = _accel.USE_NUMBA if use_numba is None else use_numba
    rows, cols, vals = (_coo_loops if use else _coo_numpy)(xm, zm, ny, coef, n)
    dim = 1 << n
    mat = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def build_hamiltonian(spec: HamiltonianSpec) -> scipy.sparse.csr_matrix:
    if spec.n > MAX_ED_SITES:
        raise ResourceError(f"exact diagonalisation limited to {MAX_ED_SITES} sites, got {spec.n}")
    h = pauli_sum_to_sparse(pauli_terms(spec), spec.n)
    if abs(h - h.conj().T).max() > 1e-12:  # pragma: no cover - terms are Hermitian by construction
        raise ValidationError("assembled Hamiltonian is not Hermitian")
    return h
