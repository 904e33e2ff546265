"""Hyperparameter selection: validation-set grid search and univariate GCV.

All methods share one ``lambdas`` axis in the system-level convention
``K + n * lam * I``; the relaxed solver receives ``lambda1 = lam / p``.
Ties in score go to the larger ``lam``, then the smaller ``r1`` (or the
larger ``lambda2``), i.e. to the more regularized model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .kernel import KernelSpec, kernel_cross, kernel_matrix
from .nuclear import SolverOptions, fit_relaxed
from .reduced_rank import _projection_from
from .ridge import Dataset, NumericalError, ridge_solve

__all__ = [
    "TuneGrid",
    "TuneResult",
    "default_grid",
    "tune_validation",
    "gcv_univariate",
    "validation_mse",
    "normalize_method",
]

log = logging.getLogger(__name__)

_ALIASES = {
    "elementwise": "elementwise",
    "eukrr": "elementwise",
    "hard_rank": "hard_rank",
    "rrmkrr": "hard_rank",
    "relaxed": "nuclear_relaxed",
    "nuclear_relaxed": "nuclear_relaxed",
}


def normalize_method(method: str) -> str:
    try:
        return _ALIASES[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(_ALIASES)}") from None


def _axis(values, name: str, allow_zero: bool = False, descending: bool = True) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} grid is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} grid has non-finite values")
    if np.any(arr < 0) or (not allow_zero and np.any(arr == 0)):
        raise ValueError(f"{name} grid must be {'non-negative' if allow_zero else 'positive'}")
    arr = np.unique(arr)
    return arr[::-1].copy() if descending else arr


@dataclass(frozen=True)
class TuneGrid:
    """Search space; axes are de-duplicated and sorted on construction.

    ``lambdas`` descend, ``r1_values`` ascend, ``lambda2s`` descend, so
    that the first minimizer in iteration order obeys the tie-break rule.
    """

    lambdas: np.ndarray
    r1_values: np.ndarray | None = None
    lambda2s: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "lambdas", _axis(self.lambdas, "lambda"))
        if self.r1_values is not None:
            r1 = np.unique(np.asarray(self.r1_values).ravel())
            if r1.size == 0 or np.any(r1 < 1) or np.any(r1 != np.round(r1)):
                raise ValueError("r1 grid must hold integers >= 1")
            object.__setattr__(self, "r1_values", r1.astype(int))
        if self.lambda2s is not None:
            object.__setattr__(self, "lambda2s", _axis(self.lambda2s, "lambda2", allow_zero=True))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"lambdas": self.lambdas.tolist()}
        if self.r1_values is not None:
            out["r1_values"] = self.r1_values.tolist()
        if self.lambda2s is not None:
            out["lambda2s"] = self.lambda2s.tolist()
        return out

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "TuneGrid":
        return cls(
            lambdas=doc["lambdas"],
            r1_values=doc.get("r1_values"),
            lambda2s=doc.get("lambda2s"),
        )


def default_grid(p: int, method: str = "elementwise") -> TuneGrid:
    method = normalize_method(method)
    lambdas = 10.0 ** np.linspace(-10, 1, 23)
    if method == "hard_rank":
        return TuneGrid(lambdas, r1_values=np.arange(1, min(p, 10) + 1))
    if method == "nuclear_relaxed":
        return TuneGrid(lambdas, lambda2s=np.concatenate([[0.0], 10.0 ** np.linspace(-6, 0, 10)]))
    return TuneGrid(lambdas)


@dataclass(frozen=True)
class TuneResult:
    best_params: dict[str, Any]
    scores: np.ndarray
    method: str
    grid: TuneGrid
    failures: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def best_score(self) -> float:
        return float(np.min(self.scores))

    def to_dict(self) -> dict[str, Any]:
        scores = np.where(np.isfinite(self.scores), self.scores, np.inf)
        return {
            "method": self.method,
            "best_params": self.best_params,
            "best_score": self.best_score,
            "grid": self.grid.to_dict(),
            "scores": [[None if not np.isfinite(v) else float(v) for v in row]
                       for row in np.atleast_2d(scores)],
            "score_axes": self.extra.get("axes", ["lambda"]),
            "failures": self.failures,
        }


def validation_mse(Y_true, Y_pred) -> float:
    Y_true = np.asarray(Y_true, dtype=float)
    diff = Y_true - np.asarray(Y_pred, dtype=float)
    return float(np.sum(diff * diff) / diff.size)


def _argmin_first(scores: np.ndarray) -> tuple:
    flat = np.where(np.isnan(scores), np.inf, scores).ravel()
    if np.all(np.isinf(flat)):
        raise NumericalError("every grid point failed")
    return np.unravel_index(int(np.argmin(flat)), scores.shape)


def tune_validation(
    train: Dataset,
    valid: Dataset,
    spec: KernelSpec,
    grid: TuneGrid,
    method: str = "elementwise",
    solver_opts: SolverOptions | None = None,
) -> TuneResult:
    """Fit on ``train`` at every grid point and score MSE on ``valid``."""
    method = normalize_method(method)
    if train.d != valid.d or train.p != valid.p:
        raise ValueError("train and valid must share input and output dimensions")
    K = kernel_matrix(spec, train.X)
    Kx = kernel_cross(spec, valid.X, train.X)
    lambdas = grid.lambdas
    failures = 0

    if method == "elementwise":
        scores = np.full((lambdas.size, 1), np.inf)
        for i, lam in enumerate(lambdas):
            try:
                U = ridge_solve(K, train.Y, lam)
                scores[i, 0] = validation_mse(valid.Y, Kx @ U)
            except (NumericalError, np.linalg.LinAlgError) as exc:
                failures += 1
                log.warning("elementwise fit failed at lambda=%g: %s", lam, exc)
        i, _ = _argmin_first(scores)
        best = {"lambda": float(lambdas[i])}
        axes = ["lambda"]

    elif method == "hard_rank":
        r1s = grid.r1_values if grid.r1_values is not None else np.arange(1, train.p + 1)
        if np.any(r1s > train.p):
            raise ValueError(f"r1 grid exceeds p = {train.p}")
        scores = np.full((lambdas.size, r1s.size), np.inf)
        for i, lam in enumerate(lambdas):
            try:
                U = ridge_solve(K, train.Y, lam)
                M = train.Y.T @ (K.values @ U)
            except (NumericalError, np.linalg.LinAlgError) as exc:
                failures += r1s.size
                log.warning("hard-rank fit failed at lambda=%g: %s", lam, exc)
                continue
            base = Kx @ U
            for j, r1 in enumerate(r1s):
                P = _projection_from(M, int(r1)).P_r1
                scores[i, j] = validation_mse(valid.Y, base @ P)
        i, j = _argmin_first(scores)
        best = {"lambda": float(lambdas[i]), "r1": int(r1s[j])}
        axes = ["lambda", "r1"]

    else:
        l2s = grid.lambda2s if grid.lambda2s is not None else np.array([0.0])
        scores = np.full((lambdas.size, l2s.size), np.inf)
        for i, lam in enumerate(lambdas):
            for j, l2 in enumerate(l2s):
                try:
                    model, _ = fit_relaxed(train, spec, lam / train.p, l2, solver_opts, K=K)
                    scores[i, j] = validation_mse(valid.Y, Kx @ model.coeff.T)
                except (NumericalError, np.linalg.LinAlgError) as exc:
                    failures += 1
                    log.warning("relaxed fit failed at lambda=%g lambda2=%g: %s", lam, l2, exc)
        i, j = _argmin_first(scores)
        best = {
            "lambda": float(lambdas[i]),
            "lambda1": float(lambdas[i] / train.p),
            "lambda2": float(l2s[j]),
        }
        axes = ["lambda", "lambda2"]

    return TuneResult(best, scores, method, grid, failures, extra={"axes": axes})


def gcv_univariate(data: Dataset, spec: KernelSpec, lambdas) -> TuneResult:
    """Generalized cross validation for scalar-output kernel ridge regression.

    ``GCV(lam) = (1/n)||(I - S) y||^2 / ((1/n) tr(I - S))^2`` with smoother
    ``S = K (K + n lam I)^{-1}``.
    """
    if data.p != 1:
        raise ValueError(f"GCV needs a single output column, got p = {data.p}")
    grid = TuneGrid(lambdas)
    n = data.n
    K = kernel_matrix(spec, data.X).values
    w, V = np.linalg.eigh(K)
    w = np.maximum(w, 0.0)
    yt = V.T @ data.Y[:, 0]
    scores = np.full((grid.lambdas.size, 1), np.inf)
    for i, lam in enumerate(grid.lambdas):
        shrink = n * lam / (w + n * lam)  # eigenvalues of I - S
        tr = float(np.sum(shrink))
        if tr <= 1e-12:
            continue
        resid = float(np.sum((shrink * yt) ** 2))
        scores[i, 0] = (resid / n) / (tr / n) ** 2
    i, _ = _argmin_first(scores)
    return TuneResult({"lambda": float(grid.lambdas[i])}, scores, "gcv", grid,
                      extra={"axes": ["lambda"]})
