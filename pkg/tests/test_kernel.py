import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from rrmkrr.kernel import (
    KernelSpec,
    UnsupportedOrderError,
    bessel_k_half_integer,
    kernel_cross,
    kernel_matrix,
    matern_eval,
)

# closed forms of r^m K_m(r) / (Gamma(m) 2^(m-1)) for half-integer m
CLOSED = {
    0.5: lambda r: np.exp(-r),
    1.5: lambda r: (1 + r) * np.exp(-r),
    2.5: lambda r: (1 + r + r**2 / 3) * np.exp(-r),
    3.5: lambda r: (1 + r + 2 * r**2 / 5 + r**3 / 15) * np.exp(-r),
}


@pytest.mark.parametrize("m", sorted(CLOSED))
def test_matches_closed_form(m):
    spec = KernelSpec(nu=m + 0.5, dim=1)
    r = np.geomspace(1e-3, 20, 400)
    want = CLOSED[m](r)
    got = matern_eval(spec, r)
    np.testing.assert_allclose(got, want, rtol=1e-10)


@pytest.mark.parametrize("k", range(6))
def test_bessel_against_scipy(k):
    r = np.geomspace(1e-3, 30, 200)
    np.testing.assert_allclose(bessel_k_half_integer(k, r), special.kv(k + 0.5, r), rtol=1e-12)


def test_bessel_against_mpmath_high_precision():
    for k in (0, 3, 7):
        for r in (1e-3, 0.37, 5.0, 25.0):
            want = float(mpmath.besselk(k + 0.5, r))
            assert math.isclose(bessel_k_half_integer(k, r), want, rel_tol=1e-12)


def test_zero_distance_is_one_and_small_r_limit():
    spec = KernelSpec.default(1)
    assert matern_eval(spec, 0.0) == 1.0
    assert matern_eval(spec, 1e-13) == 1.0
    assert abs(matern_eval(spec, 1e-6) - 1.0) < 1e-10


def test_scalar_and_array_return_types():
    spec = KernelSpec.default(2)
    assert isinstance(matern_eval(spec, 0.5), float)
    assert matern_eval(spec, np.array([[0.1, 0.2]])).shape == (1, 2)


@pytest.mark.parametrize("bad", [-0.1, float("nan")])
def test_invalid_distance(bad):
    with pytest.raises(ValueError):
        matern_eval(KernelSpec.default(1), bad)


def test_spec_validation():
    with pytest.raises(UnsupportedOrderError):
        KernelSpec(nu=2.0, dim=2)
    with pytest.raises(ValueError):
        KernelSpec(nu=0.4, dim=1)
    with pytest.raises(ValueError):
        KernelSpec(nu=3.0, dim=0)
    assert KernelSpec.default(3).order == 3.5


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gram_matrix_psd_symmetric_unit_diagonal(rng, d):
    X = rng.uniform(size=(50, d))
    K = kernel_matrix(KernelSpec.default(d), X)
    assert np.array_equal(K.values, K.values.T)
    assert np.all(np.diag(K.values) == 1.0)
    assert K.trace == 50.0
    assert np.linalg.eigvalsh(K.values).min() >= -1e-8 * K.trace


def test_gram_matches_pairwise_loop(rng):
    spec = KernelSpec(nu=2.5, dim=2)
    X = rng.uniform(size=(7, 2))
    K = kernel_matrix(spec, X).values
    for i in range(7):
        for j in range(7):
            r = float(np.linalg.norm(X[i] - X[j]))
            assert math.isclose(K[i, j], CLOSED[1.5](r) if r > 0 else 1.0, rel_tol=1e-12)


def test_cross_kernel_consistent_with_gram(rng):
    spec = KernelSpec.default(2)
    X = rng.uniform(size=(9, 2))
    np.testing.assert_allclose(kernel_cross(spec, X, X), kernel_matrix(spec, X).values, atol=1e-15)
    assert kernel_cross(spec, X[:3], X).shape == (3, 9)


def test_input_shape_errors():
    spec = KernelSpec.default(2)
    with pytest.raises(ValueError):
        kernel_matrix(spec, np.zeros((4, 3)))
    with pytest.raises(ValueError):
        kernel_matrix(spec, np.array([[0.0, np.inf]]))


@settings(max_examples=60, deadline=None)
@given(
    half=st.integers(min_value=0, max_value=6),
    r=st.lists(st.floats(min_value=0, max_value=50), min_size=2, max_size=20),
)
def test_values_in_unit_interval_and_nonincreasing(half, r):
    spec = KernelSpec(nu=half + 1.0, dim=1)
    r = np.sort(np.asarray(r))
    v = matern_eval(spec, r)
    assert np.all(v > 0) or np.all(v[r < 30] > 0)
    assert np.all(v <= 1.0 + 1e-15)
    assert np.all(np.diff(v) <= 1e-14)


@pytest.mark.parametrize("nu", [1.0, 2.0, 3.0, 4.0])
def test_strictly_decreasing_on_grid(nu):
    v = matern_eval(KernelSpec(nu=nu, dim=1), np.linspace(0, 10, 200))
    assert np.all(np.diff(v) < 0)
