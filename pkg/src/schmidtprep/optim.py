"""Limited-memory quasi-Newton minimisation shared by the layer optimisers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

logger = logging.getLogger(__name__)


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    initial_fun: float
    iterations: int
    evaluations: int
    trace: list[float] = field(default_factory=list)
    converged: bool = False
    warning: str | None = None


def lbfgs(
    fun_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    max_iter: int = 200,
    grad_tol: float = 1e-8,
    ftol: float = 0.0,
    memory: int = 10,
) -> OptimizeResult:
    """Unbounded L-BFGS with a Wolfe line search.

    ``trace`` records the objective at the start point and after every
    accepted iteration. The returned point is the best one evaluated, so the
    final objective never exceeds the initial one.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    best = {"x": x0.copy(), "f": np.inf}
    state = {"evals": 0, "last_x": None, "last_f": None}

    def wrapped(x):
        f, g = fun_and_grad(x)
        f = float(f)
        state["evals"] += 1
        state["last_x"], state["last_f"] = x.copy(), f
        if f < best["f"]:
            best["f"], best["x"] = f, x.copy()
        return f, np.asarray(g, dtype=float).ravel()

    f0, g0 = wrapped(x0)
    trace = [f0]
    if not np.all(np.isfinite(g0)) or not np.isfinite(f0):
        return OptimizeResult(x0, f0, f0, 0, 1, trace, False, "non-finite objective at start")
    if np.max(np.abs(g0), initial=0.0) <= grad_tol:
        return OptimizeResult(x0, f0, f0, 0, 1, trace, True)

    def callback(xk):
        if state["last_x"] is not None and np.array_equal(xk, state["last_x"]):
            trace.append(state["last_f"])
        else:
            trace.append(float(fun_and_grad(xk)[0]))

    res = minimize(
        wrapped,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={"maxiter": max_iter, "maxcor": memory, "gtol": grad_tol, "ftol": ftol, "maxls": 40},
    )
    warning = None
    if res.status not in (0, 1):
        warning = f"line search stopped: {res.message}"
        logger.warning(warning)
    return OptimizeResult(
        best["x"],
        best["f"],
        f0,
        int(res.nit),
        state["evals"],
        trace,
        res.status == 0,
        warning,
    )
