import os
import subprocess
import sys

import numpy as np
import pytest

from schmidtprep import _accel
from schmidtprep.circuit import gate_from_params
from schmidtprep.statevector import _apply_two_qubit_loops, _apply_two_qubit_numpy, apply_two_qubit


@pytest.mark.parametrize("n,i", [(2, 0), (5, 0), (5, 3), (8, 4)])
def test_gate_kernels_agree(n, i):
    rng = np.random.default_rng(n + i)
    vec = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    u = gate_from_params(rng.standard_normal(15))
    a = _apply_two_qubit_loops(vec, u, i, n)
    b = _apply_two_qubit_numpy(vec, u, i, n)
    assert np.allclose(a, b, atol=1e-13)
    assert np.allclose(apply_two_qubit(vec, u, i, n), b, atol=1e-13)


def test_env_flag_disables_numba():
    code = "from schmidtprep import _accel; print(_accel.USE_NUMBA, _accel.DISABLED_BY_ENV)"
    env = dict(os.environ, SCHMIDTPREP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert out == ["False", "True"]
    env["SCHMIDTPREP_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert out[1] == "False" and out[0] == str(_accel.HAVE_NUMBA)


def test_fallback_path_end_to_end():
    code = (
        "from schmidtprep.benchmarks import HamiltonianSpec, build_hamiltonian;"
        "h = build_hamiltonian(HamiltonianSpec('mbl', 6, seed=1));"
        "print(repr(float(abs(h).sum())))"
    )
    results = []
    for flag in ("1", "0"):
        env = dict(os.environ, SCHMIDTPREP_DISABLE_NUMBA=flag)
        results.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout)
    assert results[0] == results[1]


def test_njit_identity_without_numba(monkeypatch):
    monkeypatch.setattr(_accel, "HAVE_NUMBA", False)

    def f(x):
        return x + 1

    assert _accel.njit(f) is f
    assert _accel.njit(cache=True)(f) is f
