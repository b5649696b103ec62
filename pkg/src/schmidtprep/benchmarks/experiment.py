"""Method x depth grids on Hamiltonian ground states, written as CSV."""

from __future__ import annotations

import csv
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ValidationError
from ..methods import METHODS, canonical_method, run_methods
from ..sso import SsoConfig
from ..tno import TnoConfig
from .targets import target_mps
from .hamiltonians import HamiltonianSpec

CSV_COLUMNS = ("family", "n", "chi_target", "method", "L", "restart", "F_S", "eps_S", "chi_max", "seconds", "seed")

# methods whose results feed each other run in the same worker
_CHAINS = (("mpd", "mpd+lw", "mpd+all"), ("sso", "sso+all"))


@dataclass
class ExperimentConfig:
    chi_target: int = 10
    target_thresh: float = 0.0
    sso: SsoConfig = field(default_factory=SsoConfig)
    tno: TnoConfig = field(default_factory=TnoConfig)
    jobs: int = 1


@dataclass
class BenchmarkResult:
    spec: HamiltonianSpec
    chi_target: int
    target_info: dict
    rows: list[dict]
    failures: list[dict]
    reports: dict = field(default_factory=dict)

    def cell(self, method: str, L: int) -> dict | None:
        method = canonical_method(method)
        for row in self.rows:
            if row["method"] == method and row["L"] == L:
                return row
        return None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _fmt(row[k]) for k in CSV_COLUMNS})

    def write_plot_data(self, directory) -> list[Path]:
        """One wide CSV per panel: ``eps_S`` vs ``L`` and ``chi_max`` vs ``L``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        methods = [m for m in METHODS if any(r["method"] == m for r in self.rows)]
        depths = sorted({r["L"] for r in self.rows})
        paths = []
        for key in ("eps_S", "chi_max"):
            path = directory / f"{self.spec.family}_n{self.spec.n}_{key}_vs_L.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["L", *methods])
                for depth in depths:
                    cells = [self.cell(m, depth) for m in methods]
                    writer.writerow([depth, *(_fmt(c[key]) if c else "" for c in cells)])
            paths.append(path)
        return paths


def _fmt(value):
    return repr(value) if isinstance(value, float) else value


def _run_chain(target, chain, depths, sso_cfg, tno_cfg):
    """Run ``chain`` in order; a failing method also fails the ones built on it."""
    cache, seconds, failures = {}, {}, []
    for method in chain:
        t0 = time.perf_counter()
        try:
            run_methods(target, [method], depths, sso_cfg, tno_cfg, cache=cache)
        except Exception as exc:  # noqa: BLE001 - recorded per cell, run continues
            for m in chain[chain.index(method) :]:
                for depth in depths:
                    failures.append({"method": m, "L": depth, "error": f"{type(exc).__name__}: {exc}", "traceback": traceback.format_exc()})
            break
        seconds[method] = time.perf_counter() - t0
    return cache, seconds, failures


def run_experiment(spec: HamiltonianSpec, methods, L_range, cfg: ExperimentConfig | None = None) -> BenchmarkResult:
    """Synthesize every ``(method, L)`` cell for the ground state of ``spec``.

    Each cell keeps the best of ``cfg.sso.restarts`` SSO runs (the MPD-based
    methods are deterministic). Failures are recorded in ``failures`` and the
    remaining cells still run.
    """
    cfg = cfg or ExperimentConfig()
    wanted = [canonical_method(m) for m in methods]
    depths = sorted(set(int(d) for d in L_range))
    if not depths or depths[0] < 1:
        raise ValidationError("L_range must contain positive integers")
    target, info = target_mps(spec, cfg.chi_target, cfg.target_thresh)

    chains = []
    for chain in _CHAINS:
        last = max((i for i, m in enumerate(chain) if m in wanted), default=-1)
        if last >= 0:
            chains.append(chain[: last + 1])
    args = [(target, chain, depths, cfg.sso, cfg.tno) for chain in chains]
    if cfg.jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(args))) as pool:
            outputs = list(pool.map(_run_chain, *zip(*args)))
    else:
        outputs = [_run_chain(*a) for a in args]

    merged, seconds, failures = {}, {}, []
    for res, secs, fails in outputs:
        merged.update(res)
        seconds.update(secs)
        failures.extend(f for f in fails if f["method"] in wanted)

    rows, reports = [], {}
    for method in METHODS:
        if method not in wanted or method not in seconds:
            continue
        per_cell = seconds[method] / len(depths)
        for depth in depths:
            _, report = merged[method][depth]
            best = next((i for i, r in enumerate(report.restarts) if r["run_seed"] == report.run_seed), 0)
            rows.append(
                {
                    "family": spec.family,
                    "n": spec.n,
                    "chi_target": cfg.chi_target,
                    "method": method,
                    "L": depth,
                    "restart": best,
                    "F_S": report.F_S,
                    "eps_S": report.eps_S,
                    "chi_max": report.chi_max,
                    "seconds": per_cell,
                    "seed": cfg.sso.seed,
                }
            )
            reports[(method, depth)] = report
    return BenchmarkResult(spec, cfg.chi_target, info, rows, failures, reports)
