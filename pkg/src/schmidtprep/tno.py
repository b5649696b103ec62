"""Fidelity-maximising refinement of staircase circuits.

The objective is ``1 - |<target| U_S(theta) |0...0>|^2``, evaluated by exact
MPS contraction. Gradients come from two-site environments: for a layer with
ket ``|k>`` (the state before it) and bra ``|b>`` (the target pulled back
through every later layer), the derivative of ``<b| W |k>`` with respect to
gate ``g`` is a 4x4 environment built from the partially updated ket and bra
around ``g``. One forward pass over the kets and one backward pass over the
bras gives every layer's environments.

Adjoint layers (descending order, ``U^H`` gates) are handled by mirroring the
chain so that a single ascending kernel serves both orientations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import NUM_PARAMS, SWAP, Circuit, _apply_two_site, apply_matrices, gate_from_params, params_gradient
from .errors import ResourceError, ValidationError
from .mps import MPS, overlap, zero_state
from .optim import lbfgs
from .tensor_core import DTYPE, svd_descending



@dataclass
class TnoConfig:
    max_iter: int = 200
    grad_tol: float = 1e-8
    chi_cap: int | None = None
    mode: str = "layerwise"
    init_source: str = "given"
    sweeps: int = 2
    gradient_mode: str = "analytic"

    def __post_init__(self):
        if self.max_iter < 1 or self.sweeps < 1:
            raise ValidationError("max_iter and sweeps must be >= 1")
        if self.grad_tol <= 0:
            raise ValidationError("grad_tol must be positive")
        if self.mode not in ("layerwise", "joint"):
            raise ValidationError(f"mode must be 'layerwise' or 'joint', got {self.mode!r}")
        if self.init_source not in ("mpd", "sso", "given"):
            raise ValidationError(f"unknown init_source {self.init_source!r}")
        if self.gradient_mode not in ("analytic", "fd"):
            raise ValidationError(f"unknown gradient_mode {self.gradient_mode!r}")
        if self.chi_cap is not None and self.chi_cap < 1:
            raise ValidationError("chi_cap must be >= 1")


def _check_cap(tensors, chi_cap, layer):
    if chi_cap is None:
        return
    chi = max((t.shape[2] for t in tensors[:-1]), default=1)
    if chi > chi_cap:
        raise ResourceError(f"layer {layer}: bond dimension {chi} exceeds chi_cap={chi_cap}")


def _envs_ascending(bra, ket, mats, chi_cap=None, layer=None):
    """Environments of ``<bra| G_{n-2} ... G_0 |ket>`` for an ascending staircase.

    Returns ``(overlap, envs, bra_prev, ket_next)`` where ``envs[k][a, b]`` is
    the derivative of the overlap with respect to ``mats[k][a, b]``,
    ``ket_next`` is the layer applied to ``ket`` and ``bra_prev`` the layer's
    adjoint applied to ``bra``.
    """
    n = len(ket)
    ket_next = list(ket)
    ket_blocks = []
    carry = ket[0]
    for k, u in enumerate(mats):
        t = np.tensordot(carry, ket[k + 1], axes=(2, 0))
        ket_blocks.append(t)
        l, _, _, r = t.shape
        x, s, y = svd_descending(_apply_two_site(u, t).reshape(l * 2, 2 * r))
        ket_next[k] = x.reshape(l, 2, -1)
        carry = (s[:, None] * y).reshape(-1, 2, r)
    ket_next[-1] = carry
    _check_cap(ket_next, chi_cap, layer)

    bra_prev = list(bra)
    bra_blocks = [None] * (n - 1)
    carry = bra[-1]
    for k in range(n - 2, -1, -1):
        t = np.tensordot(bra[k], carry, axes=(2, 0))
        bra_blocks[k] = t
        l, _, _, r = t.shape
        x, s, y = svd_descending(_apply_two_site(mats[k].conj().T, t).reshape(l * 2, 2 * r))
        bra_prev[k + 1] = y.reshape(-1, 2, r)
        carry = (x * s[None, :]).reshape(l, 2, -1)
    bra_prev[0] = carry
    _check_cap(bra_prev, chi_cap, layer)

    right = [None] * (n - 1)
    env = np.ones((1, 1), dtype=DTYPE)
    for k in range(n - 2, -1, -1):
        right[k] = env
        if k > 0:
            b, c = bra_prev[k + 1], ket[k + 1]
            env = np.tensordot(c, env, axes=(2, 1))  # (kl, p, br)
            env = np.tensordot(b.conj(), env, axes=([1, 2], [1, 2]))  # (bl, kl)

    envs = []
    env = np.ones((1, 1), dtype=DTYPE)
    for k in range(n - 1):
        x = np.tensordot(env, ket_blocks[k], axes=(1, 0))  # (a, p', q', b')
        x = np.tensordot(x, right[k], axes=(3, 1))  # (a, p', q', b)
        e = np.tensordot(bra_blocks[k].conj(), x, axes=([0, 3], [0, 3]))  # (p, q, p', q')
        envs.append(e.reshape(4, 4))
        env = np.tensordot(env, bra[k].conj(), axes=(0, 0))  # (kl, p, br)
        env = np.tensordot(env, ket_next[k], axes=([0, 1], [0, 1]))  # (br, kr)
    ov = complex(np.sum(envs[0] * mats[0]))
    return ov, envs, bra_prev, ket_next


def _mirror_tensors(tensors):
    return [t.transpose(2, 1, 0) for t in reversed(tensors)]


def layer_environments(bra: MPS, ket: MPS, mats, adjoint: bool, chi_cap=None, layer=None):
    """Overlap ``<bra| W |ket>`` and ``dW``-environments for the applied matrices.

    For ``adjoint`` layers ``W`` applies ``mats[k]^H`` in descending order and the
    environments are with respect to those conjugated matrices.
    """
    n = ket.n
    if bra.n != n or len(mats) != n - 1:
        raise ValidationError("bra, ket and layer sizes disagree")
    if n == 1:
        raise ValidationError("layers need at least 2 sites")
    scale = np.exp(bra.norm_log + ket.norm_log)
    if not adjoint:
        ov, envs, bp, kn = _envs_ascending(bra.tensors, ket.tensors, mats, chi_cap, layer)
        return ov * scale, [e * scale for e in envs], MPS(bp, norm_log=bra.norm_log), MPS(kn, norm_log=ket.norm_log)
    mm = [SWAP @ u.conj().T @ SWAP for u in reversed(mats)]
    ov, envs_m, bp, kn = _envs_ascending(_mirror_tensors(bra.tensors), _mirror_tensors(ket.tensors), mm, chi_cap, layer)
    envs = [SWAP @ envs_m[n - 2 - k] @ SWAP * scale for k in range(n - 1)]
    return (
        ov * scale,
        envs,
        MPS(_mirror_tensors(bp), norm_log=bra.norm_log),
        MPS(_mirror_tensors(kn), norm_log=ket.norm_log),
    )


def _stored(theta):
    """Matrices as stored in a layer; adjoint layers apply their conjugate transpose."""
    return [gate_from_params(t) for t in theta]


def _layer_grad(theta, envs, ov, adjoint):
    """Gradient of ``|ov|^2`` with respect to a layer's chart coordinates."""
    grad = np.zeros_like(theta)
    for k, e in enumerate(envs):
        g_w = 2.0 * ov * e.conj()
        if adjoint:
            # applied matrix is U(theta)^H = U(-theta)
            grad[k] = -params_gradient(-theta[k], g_w)
        else:
            grad[k] = params_gradient(theta[k], g_w)
    return grad


def _layer_params(circuit: Circuit, thetas):
    if thetas is None:
        return circuit.params()
    return np.asarray(thetas, dtype=float).reshape(circuit.depth, circuit.n - 1, NUM_PARAMS)


def prepared_state(circuit: Circuit, thetas=None, chi_cap=None) -> MPS:
    thetas = _layer_params(circuit, thetas)
    psi = zero_state(circuit.n)
    for idx, ((_, adj), theta) in enumerate(zip(circuit.layers, thetas)):
        psi = apply_matrices(psi, _stored(theta), adj)
        _check_cap(psi.tensors, chi_cap, idx)
    return psi


def fidelity_loss(target: MPS, circuit: Circuit, thetas=None, chi_cap=None) -> float:
    """``1 - |<target| U_S(thetas) |0...0>|^2`` with exact contraction."""
    if target.n != circuit.n:
        raise ValidationError(f"target on {target.n} sites, circuit on {circuit.n}")
    psi = prepared_state(circuit, thetas, chi_cap)
    return 1.0 - abs(overlap(target, psi)) ** 2


def fidelity_loss_and_grad(target: MPS, circuit: Circuit, thetas=None, chi_cap=None, mode: str = "analytic", fd_step: float = 1e-5):
    """Loss ``1 - F`` and its gradient with respect to every layer's parameters."""
    thetas = _layer_params(circuit, thetas)
    if mode == "fd":
        flat = thetas.ravel()
        grad = np.zeros_like(flat)
        for a in range(flat.size):
            e = np.zeros_like(flat)
            e[a] = fd_step
            grad[a] = (fidelity_loss(target, circuit, flat + e, chi_cap) - fidelity_loss(target, circuit, flat - e, chi_cap)) / (2 * fd_step)
        return fidelity_loss(target, circuit, flat, chi_cap), grad.reshape(thetas.shape)
    if mode != "analytic":
        raise ValidationError(f"unknown gradient mode {mode!r}")
    if target.n != circuit.n:
        raise ValidationError(f"target on {target.n} sites, circuit on {circuit.n}")

    kets = [zero_state(circuit.n)]
    for idx, ((_, adj), theta) in enumerate(zip(circuit.layers, thetas)):
        kets.append(apply_matrices(kets[-1], _stored(theta), adj))
        _check_cap(kets[-1].tensors, chi_cap, idx)
    ov = overlap(target, kets[-1])
    grad = np.zeros_like(thetas)
    bra = target
    for idx in range(circuit.depth - 1, -1, -1):
        adj = circuit.layers[idx][1]
        _, envs, bra, _ = layer_environments(bra, kets[idx], _stored(thetas[idx]), adj, chi_cap, idx)
        grad[idx] = -_layer_grad(thetas[idx], envs, ov, adj)
    return 1.0 - abs(ov) ** 2, grad


def _single_layer_objective(bra: MPS, ket: MPS, adjoint: bool, chi_cap, idx):
    n = ket.n

    def fg(x):
        theta = x.reshape(n - 1, NUM_PARAMS)
        ov, envs, _, _ = layer_environments(bra, ket, _stored(theta), adjoint, chi_cap, idx)
        return 1.0 - abs(ov) ** 2, -_layer_grad(theta, envs, ov, adjoint).ravel()

    return fg


def _fd_objective(fg_value, step=1e-5):
    def fg(x):
        f0 = fg_value(x)
        grad = np.zeros_like(x)
        for a in range(x.size):
            e = np.zeros_like(x)
            e[a] = step
            grad[a] = (fg_value(x + e) - fg_value(x - e)) / (2 * step)
        return f0, grad

    return fg


def optimize_layerwise(target: MPS, circuit: Circuit, cfg: TnoConfig):
    """Optimise one layer at a time, last-applied first, for ``cfg.sweeps`` sweeps.

    Returns ``(circuit, trace)``; ``trace`` lists the fidelity at the start and
    after each layer update.
    """
    thetas = circuit.params().copy()
    n = circuit.n
    f_start = 1.0 - fidelity_loss(target, circuit, thetas, cfg.chi_cap)
    trace = [f_start]
    warnings = []
    for _ in range(cfg.sweeps):
        kets = [zero_state(n)]
        for idx, (_, adj) in enumerate(circuit.layers[:-1]):
            kets.append(apply_matrices(kets[-1], _stored(thetas[idx]), adj))
        bra = target
        for idx in range(circuit.depth - 1, -1, -1):
            adj = circuit.layers[idx][1]
            fg = _single_layer_objective(bra, kets[idx], adj, cfg.chi_cap, idx)
            if cfg.gradient_mode == "fd":
                fg = _fd_objective(lambda x, fg=fg: fg(x)[0])
            res = lbfgs(fg, thetas[idx].ravel(), max_iter=cfg.max_iter, grad_tol=cfg.grad_tol)
            if res.warning:
                warnings.append(f"layer {idx}: {res.warning}")
            thetas[idx] = res.x.reshape(n - 1, NUM_PARAMS)
            trace.append(1.0 - res.fun)
            # pull the bra back through the updated layer
            bra = apply_matrices(bra, _stored(thetas[idx]), not adj)
        if trace[-1] - trace[-1 - circuit.depth] <= 1e-12:
            break
    out = circuit.with_params(thetas)
    out.meta.update(tno="layerwise", tno_warnings=warnings)
    return out, trace


def optimize_joint(target: MPS, circuit: Circuit, cfg: TnoConfig):
    """Quasi-Newton over all layers' parameters at once. Returns ``(circuit, trace)``."""
    shape = (circuit.depth, circuit.n - 1, NUM_PARAMS)

    def fg(x):
        loss, grad = fidelity_loss_and_grad(target, circuit, x.reshape(shape), cfg.chi_cap, cfg.gradient_mode)
        return loss, grad.ravel()

    res = lbfgs(fg, circuit.params().ravel(), max_iter=cfg.max_iter, grad_tol=cfg.grad_tol)
    out = circuit.with_params(res.x.reshape(shape))
    out.meta.update(tno="joint", tno_warnings=[res.warning] if res.warning else [])
    return out, [1.0 - f for f in res.trace]
