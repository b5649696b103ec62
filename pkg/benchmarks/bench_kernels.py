"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--n 16] [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` wall time of each path
and the maximum absolute difference between their outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from schmidtprep import _accel
from schmidtprep.benchmarks.hamiltonians import HamiltonianSpec, _coo_loops, _coo_numpy, _masks, pauli_terms
from schmidtprep.circuit import gate_from_params
from schmidtprep.statevector import _apply_two_qubit_loops, _apply_two_qubit_numpy


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_gate(n, repeat, rng):
    vec = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    u = gate_from_params(rng.standard_normal(15))
    i = n // 2
    _apply_two_qubit_loops(vec, u, i, n)  # compile
    t_nb, a = best_time(lambda: _apply_two_qubit_loops(vec, u, i, n), repeat)
    t_np, b = best_time(lambda: _apply_two_qubit_numpy(vec, u, i, n), repeat)
    return t_nb, t_np, float(np.max(np.abs(a - b)))


def bench_hamiltonian(n, repeat):
    masks = _masks(pauli_terms(HamiltonianSpec("mbl", n, seed=1)), n)
    _coo_loops(*masks, n)
    t_nb, a = best_time(lambda: _coo_loops(*masks, n), repeat)
    t_np, b = best_time(lambda: _coo_numpy(*masks, n), repeat)
    return t_nb, t_np, float(np.max(np.abs(a[2] - b[2])) + np.max(np.abs(a[0] - b[0])))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=16)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':22s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max diff':>9s}")
    for name, (t_nb, t_np, diff) in (
        (f"two-qubit gate n={args.n}", bench_gate(args.n, args.repeat, rng)),
        (f"hamiltonian COO n={args.n}", bench_hamiltonian(args.n, args.repeat)),
    ):
        print(f"{name:22s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.2f} {diff:9.1e}")


if __name__ == "__main__":
    main()
