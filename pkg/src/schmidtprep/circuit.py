"""Two-qubit gates, staircase layers and their contraction with an MPS.

Gate chart
----------
``U(theta) = exp(i * sum_a theta[a] * P[a])`` over the 15 non-identity
two-qubit Pauli strings in lexicographic order of ``{I, X, Y, Z}^2``::

    IX IY IZ XI XX XY XZ YI YX YY YZ ZI ZX ZY ZZ

The first factor acts on the lower site of the pair. ``theta = 0`` is the
identity. All generators are traceless, so the chart lands in SU(4); the
global phase is irrelevant to every fidelity computed here.

Layers
------
A staircase layer holds ``n - 1`` gates on ``(0, 1), (1, 2), ...``. Applying it
contracts the gates in ascending site order; applying its adjoint contracts
the conjugate-transposed gates in descending order. Each two-site block is
split back with an untruncated SVD, so every bond grows at most by 2x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import ValidationError
from .mps import MPS, canonicalize, truncate, zero_state
from .tensor_core import DTYPE, expi_divided_differences, svd_descending

PAULI_LABELS = tuple(a + b for a in "IXYZ" for b in "IXYZ")[1:]
NUM_PARAMS = 15

_SINGLE = {
    "I": np.eye(2, dtype=DTYPE),
    "X": np.array([[0, 1], [1, 0]], dtype=DTYPE),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=DTYPE),
    "Z": np.array([[1, 0], [0, -1]], dtype=DTYPE),
}

SWAP = np.eye(4, dtype=DTYPE)[[0, 2, 1, 3]]


@lru_cache(maxsize=None)
def _generators() -> np.ndarray:
    gens = np.array([np.kron(_SINGLE[p[0]], _SINGLE[p[1]]) for p in PAULI_LABELS])
    gens.setflags(write=False)
    return gens


def pauli_generators() -> np.ndarray:
    """The 15 generators, shape ``(15, 4, 4)``, in chart order."""
    return _generators()


def _check_params(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (NUM_PARAMS,):
        raise ValidationError(f"a gate needs {NUM_PARAMS} parameters, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValidationError("gate parameters must be finite")
    return theta


def generator(theta) -> np.ndarray:
    return np.tensordot(_check_params(theta), _generators(), axes=(0, 0))


def gate_from_params(theta) -> np.ndarray:
    """4x4 unitary for a 15-vector of chart coordinates."""
    h = generator(theta)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[None, :]) @ v.conj().T


def gate_and_jacobian(theta) -> tuple[np.ndarray, np.ndarray]:
    """Unitary and its derivatives ``dU/dtheta_a``, shape ``(15, 4, 4)``."""
    h = generator(theta)
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(1j * w)[None, :]) @ v.conj().T
    f = expi_divided_differences(w)
    pt = np.einsum("ij,ajk,kl->ail", v.conj().T, _generators(), v)
    jac = np.einsum("ij,ajk,kl->ail", v, f[None] * pt, v.conj().T)
    return u, jac


def params_gradient(theta, grad_u: np.ndarray) -> np.ndarray:
    """Chain a matrix gradient through the chart.

    ``grad_u`` follows the convention ``dL = Re tr(grad_u^H dU)``.
    """
    h = generator(theta)
    w, v = np.linalg.eigh(h)
    f = expi_divided_differences(w)
    m = v.conj().T @ grad_u @ v
    pt = np.einsum("ij,ajk,kl->ail", v.conj().T, _generators(), v)
    return np.real(np.einsum("ij,aij->a", np.conj(m) * f, pt))


def params_from_unitary(u) -> np.ndarray:
    """Principal-branch chart coordinates of ``u`` with its global phase removed."""
    u = np.asarray(u, dtype=DTYPE)
    if u.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 unitary, got {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(4))) > 1e-8:
        raise ValidationError("matrix is not unitary within 1e-8")
    det = np.linalg.det(u)
    u = u * np.exp(-1j * np.angle(det) / 4)
    # complex Schur form of a normal matrix is diagonal with a unitary basis
    t, z = scipy.linalg.schur(u, output="complex")
    w = np.angle(np.diagonal(t))
    # bring the eigenphase sum to exactly zero so the generator is traceless
    excess = int(round(np.sum(w) / (2 * np.pi)))
    order = np.argsort(w)
    if excess > 0:
        w[order[::-1][:excess]] -= 2 * np.pi
    elif excess < 0:
        w[order[:-excess]] += 2 * np.pi
    h = (z * w[None, :]) @ z.conj().T
    return np.real(np.einsum("aij,ji->a", _generators(), h)) / 4.0


@dataclass
class Su4Gate:
    sites: tuple[int, int]
    params: np.ndarray
    unitary: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        i, j = self.sites
        if j != i + 1 or i < 0:
            raise ValidationError(f"gate sites must be (i, i+1), got {self.sites}")
        self.sites = (int(i), int(j))
        self.params = _check_params(self.params).copy()
        if self.unitary is None:
            self.unitary = gate_from_params(self.params)
        else:
            self.unitary = np.asarray(self.unitary, dtype=DTYPE)

    @classmethod
    def from_unitary(cls, sites, u) -> "Su4Gate":
        return cls(tuple(sites), params_from_unitary(u))


@dataclass
class StaircaseLayer:
    gates: list[Su4Gate]

    def __post_init__(self):
        for k, g in enumerate(self.gates):
            if g.sites != (k, k + 1):
                raise ValidationError(f"gate {k} acts on {g.sites}, expected {(k, k + 1)}")

    @property
    def n(self) -> int:
        return len(self.gates) + 1

    @property
    def params(self) -> np.ndarray:
        """Parameters as an ``(n - 1, 15)`` array."""
        return np.array([g.params for g in self.gates]).reshape(len(self.gates), NUM_PARAMS)

    @property
    def unitaries(self) -> list[np.ndarray]:
        return [g.unitary for g in self.gates]

    @classmethod
    def from_params(cls, theta) -> "StaircaseLayer":
        theta = np.asarray(theta, dtype=float).reshape(-1, NUM_PARAMS)
        return cls([Su4Gate((k, k + 1), theta[k]) for k in range(theta.shape[0])])

    @classmethod
    def identity(cls, n: int) -> "StaircaseLayer":
        return cls.from_params(np.zeros((n - 1, NUM_PARAMS)))


@dataclass
class Circuit:
    """Ordered layers, applied first to last, each with an adjoint flag."""

    n: int
    layers: list[tuple[StaircaseLayer, bool]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for layer, _ in self.layers:
            if layer.n != self.n:
                raise ValidationError(f"layer on {layer.n} sites in a circuit on {self.n}")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def with_params(self, thetas) -> "Circuit":
        """Copy with every layer re-parameterised; ``thetas`` is ``(depth, n - 1, 15)``."""
        thetas = np.asarray(thetas, dtype=float).reshape(self.depth, self.n - 1, NUM_PARAMS)
        layers = [(StaircaseLayer.from_params(t), adj) for t, (_, adj) in zip(thetas, self.layers)]
        return Circuit(self.n, layers, dict(self.meta))

    def params(self) -> np.ndarray:
        return np.array([layer.params for layer, _ in self.layers]).reshape(
            self.depth, self.n - 1, NUM_PARAMS
        )


def _apply_two_site(u: np.ndarray, block: np.ndarray) -> np.ndarray:
    l, _, _, r = block.shape
    out = np.tensordot(u.reshape(2, 2, 2, 2), block, axes=([2, 3], [1, 2]))
    return out.transpose(2, 0, 1, 3).reshape(l, 2, 2, r)


def _sweep_right(tensors: list[np.ndarray], mats: list[np.ndarray]) -> list[np.ndarray]:
    """Ascending staircase on tensors whose site 0 is the centre."""
    out = list(tensors)
    carry = out[0]
    for k, u in enumerate(mats):
        block = np.tensordot(carry, out[k + 1], axes=(2, 0))
        block = _apply_two_site(u, block)
        l, _, _, r = block.shape
        x, s, y = svd_descending(block.reshape(l * 2, 2 * r))
        out[k] = x.reshape(l, 2, -1)
        carry = (s[:, None] * y).reshape(-1, 2, r)
    out[-1] = carry
    return out


def apply_matrices(psi: MPS, mats: list[np.ndarray], adjoint: bool = False) -> MPS:
    """Contract a staircase given as raw 4x4 matrices (``mats[k]`` on ``(k, k+1)``)."""
    if len(mats) != psi.n - 1:
        raise ValidationError(f"{len(mats)} gates for an MPS on {psi.n} sites")
    if psi.n == 1:
        return psi.copy()
    if not adjoint:
        phi = psi if psi.center == 0 else canonicalize(psi, 0)
        return MPS(_sweep_right(phi.tensors, mats), center=psi.n - 1, norm_log=psi.norm_log)
    # adjoint: descending order with U^H; run the ascending sweep on the mirrored chain
    phi = psi if psi.center == psi.n - 1 else canonicalize(psi, psi.n - 1)
    mirrored = [t.transpose(2, 1, 0) for t in reversed(phi.tensors)]
    mm = [SWAP @ u.conj().T @ SWAP for u in reversed(mats)]
    out = _sweep_right(mirrored, mm)
    return MPS([t.transpose(2, 1, 0) for t in reversed(out)], center=0, norm_log=psi.norm_log)


def apply_layer(psi: MPS, layer: StaircaseLayer, adjoint: bool = False) -> MPS:
    if layer.n != psi.n:
        raise ValidationError(f"layer on {layer.n} sites applied to an MPS on {psi.n}")
    return apply_matrices(psi, layer.unitaries, adjoint)


def apply_circuit(psi0: MPS, c: Circuit, thresh: float = 0.0) -> MPS:
    """Apply every layer in order; ``thresh > 0`` truncates small Schmidt values after each."""
    if c.n != psi0.n:
        raise ValidationError(f"circuit on {c.n} sites applied to an MPS on {psi0.n}")
    psi = psi0
    for layer, adj in c.layers:
        psi = apply_layer(psi, layer, adj)
        if thresh > 0:
            psi, _ = truncate(psi, None, thresh)
    return psi


# Candidate columns for unitary completion, tried in this order.
_COMPLETION_BASIS = np.eye(4, dtype=DTYPE)


def complete_unitary(cols: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a 4x4 unitary by Gram-Schmidt over a fixed basis."""
    cols = np.asarray(cols, dtype=DTYPE).reshape(4, -1)
    basis = [c / np.linalg.norm(c) for c in cols.T]
    for cand in _COMPLETION_BASIS.T:
        if len(basis) == 4:
            break
        v = cand.copy()
        for _ in range(2):
            for b in basis:
                v = v - (b.conj() @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            basis.append(v / nv)
    return np.array(basis).T


def prep_layer_from_chi2(psi_tilde: MPS) -> StaircaseLayer:
    """Single staircase layer with ``layer |0...0> = psi_tilde`` for a bond-2 state.

    Gate ``k`` reads the bond index carried on qubit ``k`` together with a
    fresh ``|0>`` on qubit ``k + 1`` and writes the physical index of site
    ``k`` and the next bond index. In right-canonical form those columns are
    orthonormal; the rest of each unitary is completed deterministically.
    """
    if psi_tilde.chi > 2:
        raise ValidationError(f"prep layer needs bond dimension <= 2, got {psi_tilde.chi}")
    n = psi_tilde.n
    if n < 2:
        raise ValidationError("prep layer needs at least 2 sites")
    phi = canonicalize(psi_tilde, 0).normalized()
    b = phi.tensors
    gates = []
    for k in range(n - 1):
        if k < n - 2:
            t = b[k]  # (a, i, c): rows (i, c), columns (a, 0)
            right = t.shape[2]
            block = np.zeros((2, 2, t.shape[0]), dtype=DTYPE)
            block[:, :right, :] = t.transpose(1, 2, 0)
        else:
            t = np.tensordot(b[k], b[k + 1], axes=(2, 0))[:, :, :, 0]  # (a, i, j)
            block = t.transpose(1, 2, 0)
        cols = np.zeros((4, 4), dtype=DTYPE)
        left = block.shape[2]
        for a in range(left):
            cols[:, 2 * a] = block[:, :, a].reshape(4)
        fixed = cols[:, [2 * a for a in range(left)]]
        u = complete_unitary(fixed)
        # put completed columns into the remaining slots in ascending order
        full = np.zeros((4, 4), dtype=DTYPE)
        slots = [2 * a for a in range(left)]
        free = [c for c in range(4) if c not in slots]
        for j, c in enumerate(slots + free):
            full[:, c] = u[:, j]
        gates.append(Su4Gate.from_unitary((k, k + 1), full))
    return StaircaseLayer(gates)


def prep_circuit(layer: StaircaseLayer) -> Circuit:
    return Circuit(layer.n, [(layer, False)])


def prepare(c: Circuit) -> MPS:
    """``c |0...0>`` as an untruncated MPS."""
    return apply_circuit(zero_state(c.n), c)
