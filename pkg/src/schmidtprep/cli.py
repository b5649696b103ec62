"""Command-line interface.

Exit codes: 0 success, 2 invalid input (bad flags, unreadable or malformed
files, resource limits), 3 numerical failure. Errors print a single line
``error: <kind>: <reason>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .benchmarks.experiment import ExperimentConfig, run_experiment
from .benchmarks.targets import target_mps
from .benchmarks.hamiltonians import DEFAULT_COUPLINGS, FAMILIES, HamiltonianSpec
from .errors import NumericalError, ResourceError, ValidationError
from .methods import METHODS, canonical_method, run_methods
from .mps import chi_k_fidelity, entanglement_entropy, schmidt_spectra
from .sso import SsoConfig
from .tno import TnoConfig

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_COUPLING_FLAGS = ("J", "h_x", "dh", "t", "V", "mu")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=FAMILIES)
    g.add_argument("--n", type=int)
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--model-seed", type=int, default=0, help="seed for disordered couplings")
    g.add_argument("--chi-target", type=int, default=10)
    for flag in _COUPLING_FLAGS:
        g.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=float, default=None)


def _add_synthesis_flags(p):
    g = p.add_argument_group("synthesis")
    g.add_argument("--thresh", type=float, default=1e-7, help="Schmidt-value cutoff between layers")
    g.add_argument("--restarts", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--grad", choices=("analytic", "fd"), default="analytic")
    g.add_argument("--max-iter", type=int, default=200, help="optimiser iterations per SSO layer")
    g.add_argument("--tno-max-iter", type=int, default=200)
    g.add_argument("--tno-sweeps", type=int, default=2)
    g.add_argument("--config", help="JSON file of flag values; explicit flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="schmidtprep", description="Synthesize MPS preparation circuits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synthesize", help="build a preparation circuit for one target")
    s.add_argument("--target", help="MPS JSON file")
    _add_model_flags(s)
    s.add_argument("--method", default="sso", help=f"one of {', '.join(METHODS)} ('-' may replace '+')")
    s.add_argument("--layers", type=int, default=2)
    _add_synthesis_flags(s)
    s.add_argument("--out", help="circuit JSON output")
    s.add_argument("--report", help="report JSON output")

    b = sub.add_parser("benchmark", help="method x depth grid on a model ground state")
    _add_model_flags(b)
    b.add_argument("--methods", default=",".join(METHODS))
    b.add_argument("--layers-min", type=int, default=1)
    b.add_argument("--layers-max", type=int, required=False)
    _add_synthesis_flags(b)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", required=False, help="results CSV")
    b.add_argument("--emit-plot-data", metavar="DIR", help="write eps_S and chi_max vs L tables")

    i = sub.add_parser("inspect", help="Schmidt spectra and entropies of an MPS file")
    i.add_argument("--mps", required=True)
    i.add_argument("--bond", type=int)
    i.add_argument("--json", action="store_true")
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    config_path = getattr(args, "config", None)
    if config_path:
        config = io.load_json(config_path)
        if not isinstance(config, dict):
            raise ValidationError("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        values = {k.replace("-", "_"): v for k, v in config.items()}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValidationError(f"unknown config keys {unknown}")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def run_config(args) -> dict:
    """Everything that determines the result, as plain JSON values."""
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("config",)}


def _model_spec(args) -> HamiltonianSpec:
    if not args.model:
        raise ValidationError("--model is required")
    couplings = {k: getattr(args, k) for k in _COUPLING_FLAGS if getattr(args, k) is not None}
    unused = set(couplings) - set(DEFAULT_COUPLINGS[args.model])
    if unused:
        raise ValidationError(f"flags {sorted(unused)} do not apply to {args.model}")
    return HamiltonianSpec(args.model, args.n, args.rows, args.cols, couplings, args.model_seed)


def _configs(args):
    sso = SsoConfig(
        layers=max(getattr(args, "layers", None) or 1, 1),
        max_iter=args.max_iter,
        lambda_thresh=args.thresh,
        restarts=args.restarts,
        seed=args.seed,
        gradient_mode=args.grad,
    )
    tno = TnoConfig(max_iter=args.tno_max_iter, sweeps=args.tno_sweeps, gradient_mode=args.grad)
    return sso, tno


def cmd_synthesize(args) -> int:
    if args.target and args.model:
        raise ValidationError("give either --target or --model, not both")
    if args.target:
        target = io.load_mps(args.target).normalized()
        target_info = {"source": str(args.target)}
    else:
        spec = _model_spec(args)
        target, target_info = target_mps(spec, args.chi_target)
        target_info["spec"] = spec.to_dict()
    method = canonical_method(args.method)
    if args.layers < 1:
        raise ValidationError("--layers must be >= 1")
    sso, tno = _configs(args)
    circuit, report = run_methods(target, [method], [args.layers], sso, tno)[method][args.layers]
    if args.out:
        io.save_circuit(circuit, args.out)
    if args.report:
        payload = io.report_to_dict(report, run_config(args))
        payload["target"] = io.to_jsonable(target_info)
        io.save_json(payload, args.report)
    print(f"F_S={report.F_S!r} eps_S={report.eps_S!r} chi_max={report.chi_max}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.layers_max is None or args.out is None:
        raise ValidationError("--layers-max and --out are required")
    if args.layers_min < 1 or args.layers_max < args.layers_min:
        raise ValidationError("need 1 <= --layers-min <= --layers-max")
    spec = _model_spec(args)
    sso, tno = _configs(args)
    methods = [canonical_method(m) for m in args.methods.split(",") if m.strip()]
    cfg = ExperimentConfig(chi_target=args.chi_target, sso=sso, tno=tno, jobs=args.jobs)
    result = run_experiment(spec, methods, range(args.layers_min, args.layers_max + 1), cfg)
    result.write_csv(args.out)
    if args.emit_plot_data:
        result.write_plot_data(args.emit_plot_data)
    for row in result.rows:
        print(f"{row['method']:8s} L={row['L']:<3d} F_S={row['F_S']:.12f} eps_S={row['eps_S']:.3e} chi_max={row['chi_max']}")
    if result.failures:
        fail_path = Path(args.out).with_suffix(".failures.json")
        io.save_json([{k: f[k] for k in ("method", "L", "error")} for f in result.failures], fail_path)
        for f in result.failures:
            print(f"failed: {f['method']} L={f['L']}: {f['error']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def inspect_data(psi, bond=None) -> dict:
    spectra = schmidt_spectra(psi)
    entropies = entanglement_entropy(spectra)
    bonds = range(psi.n - 1) if bond is None else [bond]
    if bond is not None and not 0 <= bond < psi.n - 1:
        raise ValidationError(f"--bond must lie in 0..{psi.n - 2}")
    return {
        "n": psi.n,
        "bond_dims": psi.bond_dims,
        "bonds": [{"bond": b, "schmidt": spectra[b].tolist(), "entropy": float(entropies[b])} for b in bonds],
        "chi_k_fidelity": {str(k): chi_k_fidelity(psi, k) for k in (2, 4)},
    }


def cmd_inspect(args) -> int:
    psi = io.load_mps(args.mps).normalized()
    data = inspect_data(psi, args.bond)
    if args.json:
        print(json.dumps(data, sort_keys=True))
        return EXIT_OK
    print(f"n={data['n']} bond_dims={data['bond_dims']}")
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        for b in data["bonds"]:
            print(f"bond {b['bond']}: S={b['entropy']:.6f} schmidt={np.array(b['schmidt'])}")
    for k, f in data["chi_k_fidelity"].items():
        print(f"F_chi={k}: {f:.12f}")
    return EXIT_OK


COMMANDS = {"synthesize": cmd_synthesize, "benchmark": cmd_benchmark, "inspect": cmd_inspect}


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        return COMMANDS[args.command](args)
    except (ValidationError, ResourceError) as exc:
        print(f"error: validation: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
