import json

import numpy as np
import pytest

from rrmkrr import Dataset, FittedModel, KernelSpec, NumericalError
from rrmkrr.kernel import kernel_cross, kernel_matrix
from rrmkrr.ridge import effective_rank, fit_elementwise, predict, ridge_solve, training_objective

from conftest import random_instance


def test_ridge_solve_matches_explicit_inverse(rng):
    X = rng.uniform(size=(12, 1))
    K = kernel_matrix(KernelSpec.default(1), X).values
    Y = rng.standard_normal((12, 3))
    lam = 1e-3
    want = np.linalg.inv(K + 12 * lam * np.eye(12)) @ Y
    np.testing.assert_allclose(ridge_solve(K, Y, lam), want, rtol=1e-8, atol=1e-10)


def test_ridge_solve_vector_rhs(rng):
    K = np.eye(4)
    y = rng.standard_normal(4)
    np.testing.assert_allclose(ridge_solve(K, y, 0.25), y / 2.0)


def test_ridge_solve_rejects_bad_input():
    with pytest.raises(ValueError):
        ridge_solve(np.eye(3), np.ones(3), 0.0)
    with pytest.raises(ValueError):
        ridge_solve(np.eye(3), np.ones(4), 1.0)


def test_ridge_solve_indefinite_raises_numerical_error():
    K = np.array([[1.0, 0.0], [0.0, -5.0]])
    with pytest.raises(NumericalError, match="condition number"):
        ridge_solve(K, np.ones(2), 1e-3)


def test_elementwise_is_columnwise_scalar_ridge(rng, spec1):
    data = random_instance(rng, n=14, p=3)
    model = fit_elementwise(data, spec1, 1e-3)
    for k in range(3):
        single = fit_elementwise(Dataset(data.X, data.Y[:, k]), spec1, 1e-3)
        np.testing.assert_allclose(model.coeff[k], single.coeff[0], rtol=1e-12, atol=1e-14)


def test_training_objective_is_minimized_by_elementwise(rng, spec1):
    data = random_instance(rng, n=10, p=3)
    lam = 1e-2
    model = fit_elementwise(data, spec1, lam)
    base = training_objective(model, data)
    for _ in range(5):
        pert = model.coeff + 1e-3 * rng.standard_normal(model.coeff.shape)
        other = FittedModel(pert, data.X, spec1, lam, "elementwise", 3)
        assert training_objective(other, data) > base


def test_interpolation_limit(rng):
    # the exponential kernel keeps K well conditioned
    spec = KernelSpec(nu=1.0, dim=1)
    data = random_instance(rng, n=10, p=2)
    model = fit_elementwise(data, spec, 1e-12)
    np.testing.assert_allclose(predict(model, data.X), data.Y, atol=1e-3)


def test_predict_uses_cross_kernel(rng, spec1):
    data = random_instance(rng, n=8, p=2)
    model = fit_elementwise(data, spec1, 1e-2)
    Xn = rng.uniform(size=(5, 1))
    np.testing.assert_allclose(model.predict(Xn), kernel_cross(spec1, Xn, data.X) @ model.coeff.T)
    assert predict(model, np.zeros((0, 1))).shape == (0, 2)


def test_dataset_validation():
    d = Dataset(np.arange(3.0), np.arange(3.0))
    assert (d.n, d.d, d.p) == (3, 1, 1)
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 1)), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1)), np.array([[1.0], [np.nan]]))


def test_effective_rank():
    assert effective_rank(np.zeros((3, 3))) == 0
    assert effective_rank(np.outer([1, 2, 3], [1, 1])) == 1
    assert effective_rank(np.eye(4)) == 4


def test_json_round_trip(rng):
    spec = KernelSpec.default(2)
    data = random_instance(rng, n=9, p=3, d=2)
    model = fit_elementwise(data, spec, 1e-3)
    back = FittedModel.from_json(model.to_json())
    assert back.kernel == spec and back.method == model.method and back.rank == model.rank
    np.testing.assert_allclose(back.coeff, model.coeff, rtol=1e-12, atol=0)
    Xn = rng.uniform(size=(6, 2))
    np.testing.assert_allclose(back.predict(Xn), model.predict(Xn), rtol=1e-12)
    doc = json.loads(model.to_json())
    assert doc["shapes"] == {"Xtrain": [9, 2], "coeff": [3, 9]}


def test_malformed_model_document():
    with pytest.raises(ValueError):
        FittedModel.from_dict({"method": "elementwise"})
    with pytest.raises(ValueError):
        FittedModel(np.zeros((2, 3)), np.zeros((4, 1)), KernelSpec.default(1), 1.0, "elementwise", 0)


def test_small_closed_form_solves():
    np.testing.assert_allclose(ridge_solve(np.array([[1.0]]), np.array([[2.5]]), 0.25), [[2.0]])
    Y = np.array([[1.0, -3.0], [6.0, 0.5]])
    np.testing.assert_allclose(ridge_solve(np.eye(2), Y, 1.0), Y / 3.0)


def test_random_spd_system_and_residual(rng):
    for _ in range(10):
        G = rng.standard_normal((5, 5))
        K = G @ G.T + 0.1 * np.eye(5)
        Y = rng.standard_normal((5, 2))
        U = ridge_solve(K, Y, 1e-2)
        want = np.linalg.inv(K + 5e-2 * np.eye(5)) @ Y
        assert np.linalg.norm(U - want) <= 1e-10 * np.linalg.norm(want)
        assert np.linalg.norm((K + 5e-2 * np.eye(5)) @ U - Y) <= 1e-8 * np.linalg.norm(Y)


def test_zero_response_and_zero_coefficients(rng, spec1):
    X = rng.uniform(size=(6, 1))
    model = fit_elementwise(Dataset(X, np.zeros((6, 2))), spec1, 1e-3)
    assert np.all(model.coeff == 0)
    assert np.all(model.predict(rng.uniform(size=(4, 1))) == 0)


def test_predict_at_training_points_is_K_coeff(rng, spec1):
    data = random_instance(rng, n=9, p=2)
    model = fit_elementwise(data, spec1, 1e-3)
    K = kernel_matrix(spec1, data.X).values
    np.testing.assert_allclose(model.predict(data.X), K @ model.coeff.T, rtol=1e-13, atol=1e-13)


def test_single_point_exponential_kernel():
    spec = KernelSpec(nu=1.5, dim=2)
    model = FittedModel(np.array([[2.5]]), np.array([[0.0, 0.0]]), spec, 1.0, "elementwise", 1)
    pred = model.predict(np.array([[0.3, 0.4], [3.0, 4.0]]))
    np.testing.assert_allclose(pred[:, 0], 2.5 * np.exp(-np.array([0.5, 5.0])), rtol=1e-14)


def test_monotone_shrinkage(rng, spec1):
    data = random_instance(rng, n=20, p=3)
    norms = [np.linalg.norm(fit_elementwise(data, spec1, lam).predict(data.X))
             for lam in np.geomspace(1e-4, 1e1, 12)]
    assert all(b <= a for a, b in zip(norms, norms[1:]))


def test_training_row_permutation_invariance(rng, spec1):
    data = random_instance(rng, n=15, p=3)
    perm = rng.permutation(15)
    a = fit_elementwise(data, spec1, 1e-4)
    b = fit_elementwise(Dataset(data.X[perm], data.Y[perm]), spec1, 1e-4)
    Xn = rng.uniform(size=(10, 1))
    np.testing.assert_allclose(a.predict(Xn), b.predict(Xn), atol=1e-10)
