"""One entry point for every synthesis method.

``mpd`` and ``sso`` build circuits layer by layer; ``mpd+lw``, ``mpd+all`` and
``sso+all`` refine those circuits against the prepared-state fidelity:

* ``mpd+lw``: layerwise sweeps starting from the MPD circuit
* ``mpd+all``: joint optimisation starting from the ``mpd+lw`` circuit
* ``sso+all``: joint optimisation starting from the best SSO circuit
"""

from __future__ import annotations

import copy
import time
from dataclasses import replace

from .circuit import Circuit, apply_layer
from .errors import ValidationError
from .mpd import mpd_disentangle_depths
from .mps import MPS, canonicalize, chi_k_fidelity, truncate
from .sso import SsoConfig, SynthesisReport, prepared_fidelity, synthesize_depths
from .tno import TnoConfig, optimize_joint, optimize_layerwise

METHODS = ("mpd", "sso", "mpd+lw", "mpd+all", "sso+all")

_ALIASES = {m.replace("+", "-"): m for m in METHODS}


def canonical_method(name: str) -> str:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in METHODS:
        raise ValidationError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return key


def disentangling_trajectory(target: MPS, circuit: Circuit, lambda_thresh: float) -> list[MPS]:
    """States met while undoing ``circuit`` on ``target``, truncated at ``lambda_thresh``.

    Entry ``0`` is the target; entry ``k`` follows the inverse of the ``k``-th
    layer counted from the end of the circuit. The prep layer is not undone.
    """
    psi = canonicalize(target, 0).normalized()
    states = [psi]
    for layer, adj in reversed(circuit.layers[1:]):
        psi, _ = truncate(apply_layer(psi, layer, not adj), None, lambda_thresh)
        states.append(psi)
    return states


def _refined_report(method, target, circuit, base: SynthesisReport, lambda_thresh, trace, seconds):
    states = disentangling_trajectory(target, circuit, lambda_thresh)
    chis = [s.chi for s in states]
    return SynthesisReport(
        method=method,
        n=target.n,
        layers=circuit.depth,
        seed=base.seed,
        run_seed=base.run_seed,
        chi_trajectory=chis,
        chi_max=max(chis),
        f_chi2=[chi_k_fidelity(s, 2) for s in states],
        F_L=chi_k_fidelity(states[-1], 2),
        F_S=prepared_fidelity(target, circuit),
        restarts=list(base.restarts),
        flags=list(base.flags) + [f"tno: {w}" for w in circuit.meta.get("tno_warnings", [])],
        timing={"refine_s": seconds, "init_F_S": base.F_S, "trace_len": len(trace)},
    )


def _refine(method, target, base: dict, cfg: TnoConfig, lambda_thresh: float, joint: bool):
    out = {}
    for depth, (circuit, report) in base.items():
        t0 = time.perf_counter()
        fn = optimize_joint if joint else optimize_layerwise
        refined, trace = fn(target, circuit, cfg)
        refined.meta.update(method=method, layers=depth)
        rep = _refined_report(method, target, refined, report, lambda_thresh, trace, time.perf_counter() - t0)
        # the optimisers only accept improving steps; guard against roundoff at the init point
        if rep.F_S < report.F_S:
            refined = copy.deepcopy(circuit)
            refined.meta.update(method=method, layers=depth)
            rep = _refined_report(method, target, refined, report, lambda_thresh, trace, rep.timing["refine_s"])
            rep.flags.append("refinement_rejected")
        out[depth] = (refined, rep)
    return out


def run_methods(target: MPS, methods, depths, sso_cfg: SsoConfig | None = None, tno_cfg: TnoConfig | None = None, cache: dict | None = None) -> dict:
    """``{method: {L: (circuit, report)}}`` for every requested method and depth.

    Shared intermediate results (the MPD and SSO circuits) are computed once.
    Passing the same ``cache`` dict to repeated calls with identical
    arguments reuses earlier results.
    """
    sso_cfg = sso_cfg or SsoConfig()
    tno_cfg = tno_cfg or TnoConfig()
    wanted = [canonical_method(m) for m in methods]
    depths = sorted(set(int(d) for d in depths))
    if not depths or depths[0] < 1:
        raise ValidationError("depths must be positive integers")
    thresh = sso_cfg.lambda_thresh
    target = target.normalized()
    done: dict = {} if cache is None else cache

    def need(m):
        if m in done:
            return done[m]
        if m == "mpd":
            done[m] = mpd_disentangle_depths(target, depths, thresh, seed=sso_cfg.seed)
        elif m == "sso":
            done[m] = synthesize_depths(target, sso_cfg, depths)
        elif m == "mpd+lw":
            cfg = replace(tno_cfg, mode="layerwise", init_source="mpd")
            done[m] = _refine(m, target, need("mpd"), cfg, thresh, joint=False)
        elif m == "mpd+all":
            done[m] = _refine(m, target, need("mpd+lw"), replace(tno_cfg, mode="joint", init_source="mpd"), thresh, joint=True)
        elif m == "sso+all":
            done[m] = _refine(m, target, need("sso"), replace(tno_cfg, mode="joint", init_source="sso"), thresh, joint=True)
        return done[m]

    return {m: need(m) for m in wanted}

