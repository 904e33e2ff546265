import math

import numpy as np
import pytest
from scipy.stats import qmc

from rrmkrr.simulate import (
    CSV_COLUMNS,
    SimConfig,
    build_F,
    gen_data,
    halton_points,
    l2_error,
    radical_inverse,
    replicate_rng,
    run_experiment,
    test_function_h,
)


def test_h_values_by_hand():
    # d = 1, x = 0: h_1 = 2/1.05 + 0.5/1.025, h_2 = 2/1.1 + 0.5/1.05
    assert math.isclose(test_function_h(1, 1, 0.0), 2 / 1.05 + 0.5 / 1.025, rel_tol=1e-14)
    assert abs(test_function_h(1, 1, 0.0) - 2.392567) < 1e-6
    assert abs(test_function_h(1, 1, 0.05) - 2.48780) < 1e-5
    # x = 0.1 sits 0.05 from the first centre and 0.075 from the second
    assert math.isclose(test_function_h(1, 1, 0.1), 2 / 1.05 + 0.5 / 1.075, rel_tol=1e-14)
    assert math.isclose(test_function_h(2, 1, [0.0]), 2 / 1.1 + 0.5 / 1.05, rel_tol=1e-14)
    # d = 2 at the origin: distances scale by sqrt(2)
    want = 2 / (0.05 * math.sqrt(2) + 1) + 0.5 / (0.025 * math.sqrt(2) + 1)
    assert math.isclose(test_function_h(1, 2, [0.0, 0.0]), want, rel_tol=1e-14)
    assert test_function_h(3, 2, np.zeros((4, 2))).shape == (4,)
    with pytest.raises(ValueError):
        test_function_h(0, 1, 0.0)
    vals = test_function_h(4, 3, np.random.default_rng(0).uniform(size=(100, 3)))
    assert np.all((vals > 0) & (vals <= 2.5))


def test_halton_against_scipy():
    for d in (1, 2, 3, 6):
        ref = qmc.Halton(d=d, scramble=False).random(201)[1:]
        np.testing.assert_allclose(halton_points(200, d), ref, atol=1e-15)
    assert radical_inverse(6, 2) == 0.375
    with pytest.raises(ValueError):
        halton_points(5, 7)


def test_loading_matrix_structure():
    cfg = SimConfig(d=1, r=2, s=4, p=6, n=10)
    A, F = build_F(cfg, np.random.default_rng(0))
    assert A.shape == (6, 2)
    np.testing.assert_array_equal(A[:2], np.eye(2))
    assert np.all((A[2:4] >= 0) & (A[2:4] <= 1))
    np.testing.assert_array_equal(A[4:], 0)
    x = np.array([[0.3]])
    H = np.array([test_function_h(1, 1, x)[0], test_function_h(2, 1, x)[0]])
    np.testing.assert_allclose(F(x)[0], A @ H)


def test_gen_data_shapes_and_noise():
    cfg = SimConfig(d=2, r=1, p=3, n=500, noise_sd=0.1)
    _, F = build_F(cfg, np.random.default_rng(1))
    data = gen_data(cfg, F, np.random.default_rng(2))
    assert data.X.shape == (500, 2) and data.Y.shape == (500, 3)
    resid = data.Y - F(data.X)
    assert abs(resid.std() - 0.1) < 0.01


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(d=1, r=2, s=1, p=10, n=20)
    with pytest.raises(ValueError):
        SimConfig(d=1, r=3, p=2, n=20)
    with pytest.raises(ValueError):
        SimConfig(d=7, r=1, p=2, n=20)
    with pytest.raises(ValueError):
        SimConfig(d=1, r=1, p=2, n=20, methods=("bogus",))
    cfg = SimConfig(d=1, r=2, p=5, n=10, methods=("eukrr", "relaxed"))
    assert cfg.methods == ("elementwise", "nuclear_relaxed") and cfg.s == 5 and not cfg.sparse


def test_l2_error_definition():
    pts = np.array([[0.0], [1.0]])
    truth = lambda X: np.hstack([X, 2 * X])
    pred = lambda X: np.hstack([X + 1, 2 * X])
    assert l2_error(truth, pred, pts) == 1.0
    assert l2_error(truth(pts), lambda X: np.zeros((2, 2)), pts) == pytest.approx(2.5)


def test_replicate_streams_are_independent_and_stable():
    a = replicate_rng(5, 0).random(3)
    assert np.array_equal(a, replicate_rng(5, 0).random(3))
    assert not np.array_equal(a, replicate_rng(5, 1).random(3))
    assert not np.array_equal(a, replicate_rng(6, 0).random(3))


def test_experiment_deterministic_and_subsettable():
    cfg = SimConfig(d=1, r=2, p=4, n=15, replicates=3, seed=11, n_test=50)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == ",".join(CSV_COLUMNS)
    # a replicate's result does not depend on which other replicates run
    only = run_experiment(cfg, replicates=[2])
    rows = [r for r in a.table if r["replicate"] == 2]
    assert [r["l2_error"] for r in only.table] == [r["l2_error"] for r in rows]
    assert len(a.table) == 9 and a.failed_replicates == 0
    s = a.summary()
    assert set(s["medians"]) == {"elementwise", "hard_rank", "nuclear_relaxed"}
    assert s["replicates_used"] == 3


def test_fixed_loading_shares_A():
    cfg = SimConfig(d=1, r=2, p=4, n=15, replicates=2, seed=1, fixed_loading=True,
                    methods=("elementwise",))
    res = run_experiment(cfg)
    assert len(res.table) == 2 and np.isnan(res.err_rrmkrr_hard)
