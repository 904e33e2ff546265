"""Choosing hyperparameters on an independent validation set, and by GCV.

Ties in validation error go to the more regularized candidate: the larger
lambda, then the smaller r1 or the larger lambda2.
"""

import numpy as np

from rrmkrr import Dataset, KernelSpec, TuneGrid, default_grid, gcv_univariate, tune_validation

rng = np.random.default_rng(4)
p = 8
A = np.vstack([np.eye(2), rng.uniform(size=(p - 2, 2))])


def draw(n):
    X = rng.uniform(size=(n, 1))
    H = np.column_stack([np.sin(6 * X[:, 0]), np.cos(4 * X[:, 0])])
    return Dataset(X, H @ A.T + 0.1 * rng.standard_normal((n, p)))


train, valid = draw(30), draw(30)
spec = KernelSpec.default(1)

best = {}
for method in ("elementwise", "hard_rank"):
    res = tune_validation(train, valid, spec, default_grid(p, method), method)
    best[method] = res.best_params
    print(f"{method:12s} best {res.best_params}  validation MSE {res.best_score:.5f}")

# for the relaxed fit keep the elementwise lambda and search lambda2 only
grid = TuneGrid([best["elementwise"]["lambda"]], lambda2s=default_grid(p, "relaxed").lambda2s)
res = tune_validation(train, valid, spec, grid, "relaxed")
print(f"{'relaxed':12s} best {res.best_params}  validation MSE {res.best_score:.5f}")

# a single output can be tuned without held-out data
single = Dataset(train.X, train.Y[:, 0])
gcv = gcv_univariate(single, spec, np.geomspace(1e-9, 1e-1, 17))
print(f"GCV on output 1 picks lambda = {gcv.best_params['lambda']:.1e}")
