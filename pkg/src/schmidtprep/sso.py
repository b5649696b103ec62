"""Schmidt spectrum optimisation.

Each disentangling layer is an ascending staircase chosen to minimise a loss
on the Schmidt spectra of the state it produces. The default loss is the
summed bond-2 truncation error

    C = sum_i (1 - lambda_{i,1}^2 - lambda_{i,2}^2).

Loss and gradient in one sweep
------------------------------
With the input right-canonical, contracting gate ``k`` into the running
centre and splitting the block by SVD yields the *final* Schmidt values of
bond ``k``: gates ``k+1, ...`` only act to the right of that bond. The
reverse sweep differentiates each bond's singular values with
``ds_j = Re(u_j^H dM v_j)`` and passes the rest of the cotangent through the
carried factor ``S V^H = X^H M`` with ``X`` held fixed. That is exact because
everything downstream is invariant under unitary changes of the bond basis.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .circuit import (
    NUM_PARAMS,
    Circuit,
    StaircaseLayer,
    _apply_two_site,
    apply_layer,
    gate_and_jacobian,
    gate_from_params,
    prep_layer_from_chi2,
    prepare,
)
from .errors import ValidationError
from .mps import MPS, SchmidtSpectra, canonicalize, chi_k_fidelity, overlap, schmidt_spectra, truncate
from .optim import lbfgs
from .tensor_core import svd_descending

logger = logging.getLogger(__name__)

DEGENERACY_GAP = 1e-10


class RankTruncationLoss:
    """Per-bond weight outside the leading ``rank`` Schmidt coefficients.

    Any object with the same call signature, ``loss(s) -> (value, dvalue/ds)``
    for one bond's descending singular values, can be plugged in instead.
    """

    def __init__(self, rank: int = 2):
        if rank < 1:
            raise ValidationError("rank must be >= 1")
        self.rank = rank

    def __call__(self, s: np.ndarray) -> tuple[float, np.ndarray]:
        # tail sum equals 1 - head for normalised s, without the cancellation
        tail = s[self.rank :]
        grad = np.zeros_like(s)
        grad[self.rank :] = 2.0 * tail
        return float(np.sum(tail**2)), grad

    def __repr__(self):
        return f"RankTruncationLoss(rank={self.rank})"


LossFn = Callable[[np.ndarray], "tuple[float, np.ndarray]"]
DEFAULT_LOSS = RankTruncationLoss(2)


@dataclass
class SsoConfig:
    layers: int = 2
    max_iter: int = 200
    grad_tol: float = 1e-8
    init_std: float = 1e-3
    lambda_thresh: float = 1e-7
    restarts: int = 2
    seed: int = 0
    gradient_mode: str = "analytic"
    basin_hops: int = 0
    hop_std: float = 0.05

    def __post_init__(self):
        if self.layers < 1:
            raise ValidationError("layers must be >= 1")
        if self.max_iter < 1 or self.restarts < 1:
            raise ValidationError("max_iter and restarts must be >= 1")
        if self.grad_tol <= 0 or self.init_std <= 0 or self.lambda_thresh < 0:
            raise ValidationError("tolerances must be positive")
        if self.gradient_mode not in ("analytic", "fd"):
            raise ValidationError(f"gradient_mode must be 'analytic' or 'fd', got {self.gradient_mode!r}")


@dataclass
class SynthesisReport:
    method: str
    n: int
    layers: int
    seed: int
    run_seed: int | None = None
    layer_records: list[dict] = field(default_factory=list)
    chi_trajectory: list[int] = field(default_factory=list)
    chi_max: int = 1
    f_chi2: list[float] = field(default_factory=list)
    F_L: float = float("nan")
    F_S: float = float("nan")
    restarts: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def eps_S(self) -> float:
        return 1.0 - self.F_S

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_S"] = self.eps_S
        return d


class LossGrad(NamedTuple):
    loss: float
    grad: np.ndarray
    degenerate: bool


def sso_loss(spectra: SchmidtSpectra, loss: LossFn = DEFAULT_LOSS) -> float:
    return float(sum(loss(np.asarray(s))[0] for s in spectra))


def _right_canonical(psi: MPS) -> MPS:
    return psi if psi.center == 0 else canonicalize(psi, 0)


def _forward(tensors, mats, loss: LossFn, keep: bool):
    carry = tensors[0]
    total = 0.0
    degenerate = False
    cache = []
    rank = getattr(loss, "rank", 2)
    for k, u in enumerate(mats):
        t = np.tensordot(carry, tensors[k + 1], axes=(2, 0))
        block = _apply_two_site(u, t)
        l, _, _, r = block.shape
        x, s, y = svd_descending(block.reshape(l * 2, 2 * r))
        val, ds = loss(s)
        total += val
        if s.size > rank and s[rank - 1] > DEGENERACY_GAP and s[rank - 1] - s[rank] < DEGENERACY_GAP:
            degenerate = True
        if keep:
            cache.append((t, x, y, ds))
        carry = (s[:, None] * y).reshape(-1, 2, r)
    return total, degenerate, cache


def layer_loss(psi: MPS, theta, loss: LossFn = DEFAULT_LOSS) -> float:
    """Loss of the state produced by the staircase with parameters ``theta``."""
    phi = _right_canonical(psi)
    theta = np.asarray(theta, dtype=float).reshape(phi.n - 1, NUM_PARAMS)
    mats = [gate_from_params(t) for t in theta]
    return _forward(phi.tensors, mats, loss, keep=False)[0]


def sso_loss_and_grad(psi: MPS, theta, mode: str = "analytic", loss: LossFn = DEFAULT_LOSS, fd_step: float = 1e-5) -> LossGrad:
    """Loss after one staircase layer and its gradient, shape ``(n - 1, 15)``."""
    phi = _right_canonical(psi)
    n = phi.n
    theta = np.asarray(theta, dtype=float).reshape(n - 1, NUM_PARAMS)
    if mode == "fd":
        f0 = layer_loss(phi, theta, loss)
        flat = theta.ravel()
        grad = np.zeros_like(flat)
        for a in range(flat.size):
            e = np.zeros_like(flat)
            e[a] = fd_step
            grad[a] = (layer_loss(phi, flat + e, loss) - layer_loss(phi, flat - e, loss)) / (2 * fd_step)
        return LossGrad(f0, grad.reshape(theta.shape), False)
    if mode != "analytic":
        raise ValidationError(f"unknown gradient mode {mode!r}")

    gates = [gate_and_jacobian(t) for t in theta]
    mats = [g[0] for g in gates]
    total, degenerate, cache = _forward(phi.tensors, mats, loss, keep=True)

    grad = np.zeros_like(theta)
    g_carry = None
    for k in range(n - 2, -1, -1):
        t, x, y, ds = cache[k]
        l, _, _, r = t.shape
        g_m = (x * ds[None, :]) @ y
        if g_carry is not None:
            g_m = g_m + x @ g_carry.reshape(x.shape[1], 2 * r)
        g_block = g_m.reshape(l, 2, 2, r)
        g_u = np.tensordot(g_block, t.conj(), axes=([0, 3], [0, 3])).reshape(4, 4)
        u, jac = gates[k]
        grad[k] = np.real(np.einsum("ij,aij->a", g_u.conj(), jac))
        g_t = _apply_two_site(u.conj().T, g_block)
        g_carry = np.tensordot(g_t, phi.tensors[k + 1].conj(), axes=([2, 3], [1, 2]))
    return LossGrad(total, grad, degenerate)


def optimize_layer(psi: MPS, cfg: SsoConfig, seed=None, loss: LossFn = DEFAULT_LOSS, rng=None):
    """Optimise one disentangling layer from a near-identity start.

    Returns ``(theta, info)`` where ``info`` holds the accepted-step loss trace,
    iteration counts and any line-search warning.
    """
    phi = _right_canonical(psi)
    n = phi.n
    rng = np.random.default_rng(seed) if rng is None else rng
    x0 = rng.normal(0.0, cfg.init_std, size=(n - 1) * NUM_PARAMS)
    flags = set()

    def fg(x):
        res = sso_loss_and_grad(phi, x, cfg.gradient_mode, loss)
        if res.degenerate:
            flags.add("degenerate_spectrum")
        return res.loss, res.grad.ravel()

    res = lbfgs(fg, x0, max_iter=cfg.max_iter, grad_tol=cfg.grad_tol)
    best, trace = res, list(res.trace)
    iterations, evaluations = res.iterations, res.evaluations
    for _ in range(cfg.basin_hops):
        kicked = best.x + rng.normal(0.0, cfg.hop_std, size=best.x.size)
        hop = lbfgs(fg, kicked, max_iter=cfg.max_iter, grad_tol=cfg.grad_tol)
        iterations += hop.iterations
        evaluations += hop.evaluations
        if hop.fun < best.fun:
            best = hop
            trace.append(float(hop.fun))
    info = {
        "loss_before": float(res.initial_fun),
        "loss_after": float(best.fun),
        "iterations": int(iterations),
        "evaluations": int(evaluations),
        "converged": bool(best.converged),
        "warning": best.warning,
        "trace": [float(v) for v in trace],
        "flags": sorted(flags),
    }
    return best.x.reshape(n - 1, NUM_PARAMS), info


@dataclass
class DisentangleResult:
    layers: list[StaircaseLayer]
    states: list[MPS]
    records: list[dict]
    flags: list[str]


def disentangle(target: MPS, cfg: SsoConfig, seed=None, loss: LossFn = DEFAULT_LOSS, num_layers: int | None = None) -> DisentangleResult:
    """Optimise ``cfg.layers - 1`` staircases in sequence (the prep layer is the last one).

    ``states[k]`` is the (truncated, normalised) state after ``k`` layers;
    ``states[0]`` is the target itself.
    """
    count = cfg.layers - 1 if num_layers is None else num_layers
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    psi = _right_canonical(target).normalized()
    states = [psi]
    layers, records, flags = [], [], set()
    for _ in range(count):
        theta, info = optimize_layer(psi, cfg, loss=loss, rng=rng)
        layer = StaircaseLayer.from_params(theta)
        out = apply_layer(psi, layer)
        chi_before = out.chi
        psi, discarded = truncate(out, None, cfg.lambda_thresh)
        info.update(
            chi_untruncated=chi_before,
            chi=psi.chi,
            bond_dims=psi.bond_dims,
            discarded=discarded,
            spectra=[s.tolist() for s in schmidt_spectra(psi)],
        )
        if info["warning"]:
            flags.add("line_search_warning")
        flags.update(info["flags"])
        layers.append(layer)
        states.append(psi)
        records.append(info)
    return DisentangleResult(layers, states, records, sorted(flags))


def assemble_circuit(n: int, disentanglers: list[tuple[StaircaseLayer, bool]], final: MPS, meta: dict | None = None):
    """Prep layer for the bond-2 part of ``final`` followed by the inverted disentanglers.

    ``disentanglers`` lists ``(layer, adjoint)`` as they were applied to the
    target. Returns ``(circuit, F_L)``.
    """
    approx, _ = truncate(final, 2, 0.0)
    f_l = abs(overlap(final, approx)) ** 2
    prep = prep_layer_from_chi2(approx)
    layers = [(prep, False)] + [(layer, not adj) for layer, adj in reversed(disentanglers)]
    return Circuit(n, layers, dict(meta or {})), float(f_l)


def prepared_fidelity(target: MPS, circuit: Circuit) -> float:
    """``|<target|U_S|0...0>|^2`` with ``target`` normalised first."""
    return float(abs(overlap(target, prepare(circuit))) ** 2 / overlap(target, target).real)


def restart_seeds(root: int, count: int) -> list[int]:
    """Deterministic per-restart seeds split from one root seed."""
    children = np.random.SeedSequence(root).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def _sso_run(target: MPS, cfg: SsoConfig, run_seed: int, depths, loss: LossFn):
    """One seeded run; circuits for every depth in ``depths`` share the greedy layer sequence."""
    t0 = time.perf_counter()
    res = disentangle(target, cfg, seed=run_seed, loss=loss, num_layers=max(depths) - 1)
    t_dis = time.perf_counter() - t0
    out = {}
    for depth in depths:
        t1 = time.perf_counter()
        k = depth - 1
        states = res.states[: k + 1]
        circuit, f_l = assemble_circuit(
            target.n,
            [(layer, False) for layer in res.layers[:k]],
            states[-1],
            {"method": "sso", "layers": depth, "run_seed": run_seed},
        )
        f_s = prepared_fidelity(target, circuit)
        chis = [s.chi for s in states]
        report = SynthesisReport(
            method="sso",
            n=target.n,
            layers=depth,
            seed=cfg.seed,
            run_seed=run_seed,
            layer_records=res.records[:k],
            chi_trajectory=chis,
            chi_max=max(chis),
            f_chi2=[chi_k_fidelity(s, 2) for s in states],
            F_L=f_l,
            F_S=f_s,
            flags=list(res.flags),
            timing={"disentangle_s": t_dis, "assemble_s": time.perf_counter() - t1},
        )
        out[depth] = (circuit, report)
    return out


def best_of(runs: list[tuple[Circuit, SynthesisReport]]):
    """Highest ``F_S``; ties go to the earlier restart."""
    best = max(range(len(runs)), key=lambda i: (runs[i][1].F_S, -i))
    circuit, report = runs[best]
    report.restarts = [{"run_seed": r.run_seed, "F_S": r.F_S} for _, r in runs]
    return circuit, report


def synthesize_depths(target: MPS, cfg: SsoConfig, depths, loss: LossFn = DEFAULT_LOSS):
    """``{L: (circuit, report)}`` for each ``L`` in ``depths``, best over restarts."""
    depths = sorted(set(int(d) for d in depths))
    if depths[0] < 1:
        raise ValidationError("circuit depth must be >= 1")
    per_run = [_sso_run(target, cfg, s, depths, loss) for s in restart_seeds(cfg.seed, cfg.restarts)]
    return {d: best_of([run[d] for run in per_run]) for d in depths}


def synthesize(target: MPS, cfg: SsoConfig, loss: LossFn = DEFAULT_LOSS):
    """Preparation circuit with ``cfg.layers`` layers: ``(circuit, report)``."""
    return synthesize_depths(target, cfg, [cfg.layers], loss)[cfg.layers]
