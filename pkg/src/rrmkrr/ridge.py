"""Kernel ridge regression: shared SPD solve, elementwise fit, prediction.

The ridge parameter ``lam`` always enters the linear system as
``K + n * lam * I``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import linalg

from .kernel import KernelMatrix, KernelSpec, kernel_cross, kernel_matrix

__all__ = [
    "Dataset",
    "FittedModel",
    "NumericalError",
    "ridge_solve",
    "fit_elementwise",
    "predict",
    "effective_rank",
    "METHODS",
    "training_objective",
]

METHODS = ("elementwise", "hard_rank", "nuclear_relaxed")
RANK_TOL = 1e-8


class NumericalError(ArithmeticError):
    """A factorization or spectral computation failed."""


def effective_rank(B, tol: float = RANK_TOL) -> int:
    """Number of singular values above ``tol * sigma_max``."""
    B = np.asarray(B, dtype=float)
    if B.size == 0:
        return 0
    s = np.linalg.svd(B, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


@dataclass(frozen=True)
class Dataset:
    """Inputs ``X`` of shape ``(n, d)`` and responses ``Y`` of shape ``(n, p)``."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if Y.ndim == 1:
            Y = Y.reshape(-1, 1)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("X and Y must be 2-d")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if X.shape[0] < 1 or X.shape[1] < 1 or Y.shape[1] < 1:
            raise ValueError("need n, d, p >= 1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def p(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class FittedModel:
    """Representer-form model ``F(x) = coeff @ psi(x - Xtrain)``.

    ``coeff`` is ``(p, n)``. ``ridge`` is the system-level ``lam``; for the
    relaxed solver ``params`` also carries ``lambda1`` and ``lambda2``.
    """

    coeff: np.ndarray
    Xtrain: np.ndarray
    kernel: KernelSpec
    ridge: float
    method: str
    rank: int
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        coeff = np.asarray(self.coeff, dtype=float)
        if coeff.ndim != 2 or coeff.shape[1] != self.Xtrain.shape[0]:
            raise ValueError("coeff must be (p, n) with n training rows")
        if not np.all(np.isfinite(coeff)):
            raise NumericalError("coefficient matrix has non-finite entries")

    @property
    def p(self) -> int:
        return self.coeff.shape[0]

    @property
    def n(self) -> int:
        return self.coeff.shape[1]

    def predict(self, Xnew) -> np.ndarray:
        return predict(self, Xnew)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "nu": self.kernel.nu,
            "d": self.kernel.dim,
            "lambda": self.ridge,
            "rank": self.rank,
            "params": self.params,
            "shapes": {"Xtrain": list(self.Xtrain.shape), "coeff": list(self.coeff.shape)},
            "Xtrain": self.Xtrain.ravel().tolist(),
            "coeff": self.coeff.ravel().tolist(),
        }

    def to_json(self) -> str:
        # repr-based float serialization round-trips exactly
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "FittedModel":
        try:
            shapes = doc["shapes"]
            Xtrain = np.asarray(doc["Xtrain"], dtype=float).reshape(shapes["Xtrain"])
            coeff = np.asarray(doc["coeff"], dtype=float).reshape(shapes["coeff"])
            spec = KernelSpec(nu=float(doc["nu"]), dim=int(doc["d"]))
            return cls(
                coeff=coeff,
                Xtrain=Xtrain,
                kernel=spec,
                ridge=float(doc["lambda"]),
                method=doc["method"],
                rank=int(doc.get("rank", effective_rank(coeff))),
                params=dict(doc.get("params", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed model document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        return cls.from_dict(json.loads(text))


def _as_kernel_values(K) -> np.ndarray:
    return K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)


def ridge_solve(K, Y, lambda_eff: float) -> np.ndarray:
    """Solve ``(K + n * lambda_eff * I) U = Y`` by Cholesky factorization.

    On factorization failure a jitter of ``1e-10 * trace(K) / n`` is added
    once before giving up.
    """
    if not lambda_eff > 0:
        raise ValueError(f"lambda must be positive, got {lambda_eff}")
    Kv = _as_kernel_values(K)
    Y = np.asarray(Y, dtype=float)
    vector = Y.ndim == 1
    if vector:
        Y = Y[:, None]
    n = Kv.shape[0]
    if Y.shape[0] != n:
        raise ValueError(f"Y has {Y.shape[0]} rows, kernel matrix is {n}x{n}")
    A = Kv + n * lambda_eff * np.eye(n)
    try:
        cf = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError:
        jitter = 1e-10 * np.trace(Kv) / n
        try:
            cf = linalg.cho_factor(A + jitter * np.eye(n), lower=True)
        except linalg.LinAlgError as exc:
            cond = np.linalg.cond(A)
            raise NumericalError(
                f"K + n*lambda*I is not positive definite (condition number {cond:.3e})"
            ) from exc
    U = linalg.cho_solve(cf, Y)
    return U[:, 0] if vector else U


def fit_elementwise(data: Dataset, spec: KernelSpec, lam: float, K=None) -> FittedModel:
    """Independent kernel ridge regression for every output column."""
    if K is None:
        K = kernel_matrix(spec, data.X)
    U = ridge_solve(K, data.Y, lam)
    coeff = U.T.copy()
    return FittedModel(
        coeff=coeff,
        Xtrain=data.X,
        kernel=spec,
        ridge=float(lam),
        method="elementwise",
        rank=effective_rank(coeff),
    )


def predict(model: FittedModel, Xnew) -> np.ndarray:
    """Evaluate the fitted vector function at the rows of ``Xnew``; returns ``(q, p)``."""
    Xnew = np.asarray(Xnew, dtype=float)
    if Xnew.ndim == 2 and Xnew.shape[0] == 0:
        if Xnew.shape[1] != model.kernel.dim:
            raise ValueError(f"Xnew must have {model.kernel.dim} columns")
        return np.zeros((0, model.p))
    return kernel_cross(model.kernel, Xnew, model.Xtrain) @ model.coeff.T


def training_objective(model: FittedModel, data: Dataset, K=None) -> float:
    """Penalized training loss ``(1/pn) ||Y - K A^T||^2 + (lam/p) tr(A K A^T)``.

    This is the rank-constrained criterion with ``lambda1 = lam / p``.
    """
    if K is None:
        K = kernel_matrix(model.kernel, data.X)
    Kv = _as_kernel_values(K)
    A = model.coeff
    R = data.Y - Kv @ A.T
    pn = data.p * data.n
    return float(np.sum(R * R) / pn + (model.ridge / data.p) * np.sum(A * (A @ Kv)))
