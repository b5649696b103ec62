import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _oracles import bond_singular_values, mps_to_dense
from schmidtprep.errors import ResourceError, ValidationError
from schmidtprep.mps import (
    MPS,
    SchmidtSpectra,
    canonicalize,
    chi_k_fidelity,
    entanglement_entropy,
    fidelity,
    from_statevector,
    ghz_state,
    mirror,
    overlap,
    product_state,
    random_mps,
    schmidt_spectra,
    to_statevector,
    truncate,
    zero_state,
)


def rand_vec(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return v / np.linalg.norm(v)


def is_left_iso(t):
    m = t.reshape(-1, t.shape[2])
    return np.allclose(m.conj().T @ m, np.eye(t.shape[2]), atol=1e-10)


def is_right_iso(t):
    m = t.reshape(t.shape[0], -1)
    return np.allclose(m @ m.conj().T, np.eye(t.shape[0]), atol=1e-10)


def test_bond_chain_validation():
    with pytest.raises(ValidationError):
        MPS([np.ones((1, 2, 2)), np.ones((3, 2, 1))])
    with pytest.raises(ValidationError):
        MPS([np.ones((2, 2, 1))])
    with pytest.raises(ValidationError):
        MPS([])


def test_product_state_from_statevector():
    v = np.zeros(8)
    v[0] = 1
    psi = from_statevector(v)
    assert psi.bond_dims == [1, 1]
    assert all(np.allclose(s, [1]) for s in schmidt_spectra(psi))


def test_ghz_spectra():
    v = np.zeros(16)
    v[0] = v[-1] = 1 / math.sqrt(2)
    for psi in (from_statevector(v), ghz_state(4)):
        for s in schmidt_spectra(psi):
            assert np.allclose(s, [1 / math.sqrt(2)] * 2)
    assert np.allclose(to_statevector(ghz_state(4)), v)


def test_statevector_round_trip():
    v = rand_vec(8, 0)
    psi, err = from_statevector(v, chi_max=16, return_error=True)
    assert err == pytest.approx(0, abs=1e-14)
    assert abs(np.vdot(v, to_statevector(psi))) ** 2 == pytest.approx(1, abs=1e-10)
    assert np.allclose(to_statevector(psi), mps_to_dense(psi.tensors))


def test_from_statevector_truncation_error_is_infidelity():
    v = rand_vec(8, 1)
    psi, err = from_statevector(v, chi_max=3, return_error=True)
    assert psi.chi <= 3
    f = abs(np.vdot(v, to_statevector(psi))) ** 2
    assert f == pytest.approx(1 - err, abs=1e-10)


def test_from_statevector_validation():
    with pytest.raises(ValidationError):
        from_statevector(np.ones(8))
    with pytest.raises(ValidationError):
        from_statevector(np.ones(6) / math.sqrt(6))
    with pytest.raises(ResourceError):
        from_statevector(np.zeros(2**25))


def test_to_statevector_norm_log():
    psi = random_mps(4, 2, 0)
    psi.norm_log = math.log(3.0)
    assert np.linalg.norm(to_statevector(psi)) == pytest.approx(3.0, rel=1e-10)


def test_canonicalize_examples():
    psi = random_mps(7, 4, 3)
    for c in (0, 6, 3):
        phi = canonicalize(psi, c)
        assert abs(overlap(psi, phi)) ** 2 == pytest.approx(1, abs=1e-10)
        assert all(is_left_iso(t) for t in phi.tensors[:c])
        assert all(is_right_iso(t) for t in phi.tensors[c + 1 :])
    phi = canonicalize(psi, 0)
    again = canonicalize(phi, 0)
    assert all(np.allclose(a, b, atol=1e-12) for a, b in zip(phi.tensors, again.tensors))
    prod = canonicalize(product_state([1, 0, 1]), 1)
    assert all(t.shape == (1, 2, 1) for t in prod.tensors)


@given(st.integers(2, 8), st.integers(1, 8), st.integers(0, 2**31))
def test_schmidt_spectra_match_dense(n, chi, seed):
    psi = random_mps(n, chi, seed)
    v = to_statevector(psi)
    spectra = schmidt_spectra(psi)
    assert len(spectra) == n - 1
    for bond, s in enumerate(spectra):
        ref = bond_singular_values(v, n, bond)[: len(s)]
        assert np.allclose(s, ref, atol=1e-9)
        assert np.all(np.diff(s) <= 1e-15)
        assert abs(np.sum(s**2) - 1) <= 1e-10


def test_spectra_of_noncanonical_input():
    rng = np.random.default_rng(5)
    tensors = [rng.standard_normal((1, 2, 3)), rng.standard_normal((3, 2, 3)), rng.standard_normal((3, 2, 1))]
    psi = MPS(tensors)
    v = mps_to_dense(psi.tensors)
    v /= np.linalg.norm(v)
    for bond, s in enumerate(schmidt_spectra(psi)):
        assert np.allclose(s, bond_singular_values(v, 3, bond)[: len(s)], atol=1e-10)


def test_entropy_examples():
    spectra = SchmidtSpectra([np.array([1.0]), np.array([1, 1]) / math.sqrt(2)])
    assert np.allclose(entanglement_entropy(spectra), [0.0, math.log(2)])
    lam = np.array([0.8, 0.5, math.sqrt(1 - 0.64 - 0.25)])
    ref = -sum(x**2 * math.log(x**2) for x in lam)
    assert entanglement_entropy(SchmidtSpectra([lam]))[0] == pytest.approx(ref, abs=1e-12)


@given(st.integers(2, 8), st.integers(1, 6), st.integers(0, 2**31))
def test_entropy_bound(n, chi, seed):
    psi = random_mps(n, chi, seed)
    s = entanglement_entropy(schmidt_spectra(psi))
    assert np.all(s <= np.log(psi.bond_dims) + 1e-10)


def test_truncate_discarded_weight_example():
    # p = [0.7, 0.2, 0.08, 0.02] on the middle bond of four qubits: sum_k sqrt(p_k) |k>|k>
    p = np.array([0.7, 0.2, 0.08, 0.02])
    v = np.zeros(16)
    for k, pk in enumerate(p):
        v[k * 4 + k] = math.sqrt(pk)
    psi = from_statevector(v)
    out, discarded = truncate(psi, 2, 0.0)
    assert discarded == pytest.approx(0.10, abs=1e-12)
    assert fidelity(psi, out) == pytest.approx(0.9, abs=1e-12)


def test_truncate_identity_when_unbounded():
    psi = random_mps(7, 5, 2)
    out, discarded = truncate(psi, None, 0.0)
    assert discarded == pytest.approx(0, abs=1e-14)
    assert fidelity(psi, out) == pytest.approx(1, abs=1e-12)
    assert out.bond_dims == psi.bond_dims


@pytest.mark.parametrize("seed", range(5))
def test_truncate_fidelity_identity(seed):
    psi = random_mps(8, 8, seed)
    out, discarded = truncate(psi, 2, 0.0)
    f = abs(np.vdot(to_statevector(psi), to_statevector(out))) ** 2
    assert f == pytest.approx(1 - discarded, abs=1e-9)
    assert out.chi == 2
    assert chi_k_fidelity(psi, 2) == pytest.approx(f, abs=1e-10)


def test_truncate_thresh_and_validation():
    v = np.zeros(4)
    v[0], v[3] = math.sqrt(1 - 1e-16), 1e-8
    out, discarded = truncate(from_statevector(v / np.linalg.norm(v)), None, 1e-7)
    assert out.chi == 1 and discarded == pytest.approx(1e-16, rel=1e-6)
    with pytest.raises(ValidationError):
        truncate(out, 0)


def test_overlap_examples():
    psi = random_mps(6, 4, 1)
    assert overlap(psi, psi) == pytest.approx(1, abs=1e-12)
    assert overlap(product_state([0, 1, 0]), product_state([0, 1, 1])) == 0
    phi = random_mps(6, 3, 2)
    ref = np.vdot(to_statevector(psi), to_statevector(phi))
    assert abs(overlap(psi, phi) - ref) <= 1e-10
    with pytest.raises(ValidationError):
        overlap(psi, random_mps(5, 2, 0))


def test_random_mps_examples():
    assert all(np.allclose(s, [1]) for s in schmidt_spectra(random_mps(5, 1, 0)))
    a, b = random_mps(6, 6, 11), random_mps(6, 6, 11)
    assert all(np.array_equal(x, y) for x, y in zip(a.tensors, b.tensors))
    sp = schmidt_spectra(random_mps(6, 6, 12, real_valued=True))
    assert np.allclose(sp.sums, 1, atol=1e-10)
    assert random_mps(6, 6, 12, real_valued=True).bond_dims == [2, 4, 6, 4, 2]


def test_chi_k_fidelity_examples():
    assert chi_k_fidelity(ghz_state(6), 2) == pytest.approx(1, abs=1e-12)
    assert chi_k_fidelity(product_state([1, 0, 1, 1]), 1) == pytest.approx(1, abs=1e-12)
    assert chi_k_fidelity(zero_state(3), 1) == pytest.approx(1, abs=1e-12)


def test_mirror_reverses_sites():
    psi = random_mps(5, 3, 4)
    v = to_statevector(psi).reshape([2] * 5)
    assert np.allclose(to_statevector(mirror(psi)), v.transpose(4, 3, 2, 1, 0).ravel())
