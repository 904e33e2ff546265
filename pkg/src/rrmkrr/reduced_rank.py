"""Hard-rank reduced-rank kernel ridge regression.

The ridge fit ``U = (K + n lam I)^{-1} Y`` is post-multiplied by the
orthogonal projector onto the ``r1`` leading eigenvectors of
``M = Y^T K U``. With the objective written as
``(1/pn) sum ||Y_j - g_j(X)||^2 + lambda1 sum ||g_k||^2`` the system-level
ridge parameter is ``lam = p * lambda1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import KernelSpec, kernel_matrix
from .ridge import Dataset, FittedModel, _as_kernel_values, effective_rank, ridge_solve

__all__ = ["ProjectionInfo", "build_projection", "fit_hard_rank", "lambda_from_lambda1"]


def lambda_from_lambda1(lambda1: float, p: int) -> float:
    """System-level ridge parameter for objective weight ``lambda1``."""
    return p * lambda1


@dataclass(frozen=True)
class ProjectionInfo:
    P_r1: np.ndarray
    eigvals: np.ndarray
    r1: int


def _check_rank(r1, p: int) -> int:
    if int(r1) != r1 or not 1 <= r1 <= p:
        raise ValueError(f"r1 must be an integer in [1, {p}], got {r1}")
    return int(r1)


def _projection_from(M: np.ndarray, r1: int) -> ProjectionInfo:
    p = M.shape[0]
    r1 = _check_rank(r1, p)
    M = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(M)
    # descending eigenvalues; exact ties keep eigh's column order
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    if r1 == p:
        P = np.eye(p)
    else:
        Vr = V[:, :r1]
        P = Vr @ Vr.T
        P = 0.5 * (P + P.T)
    return ProjectionInfo(P_r1=P, eigvals=w, r1=r1)


def build_projection(K, Y, lam: float, r1: int, U=None) -> ProjectionInfo:
    """Projector onto the ``r1`` principal eigenvectors of ``Y^T K (K + n lam I)^{-1} Y``.

    ``U`` may be passed to reuse an existing ridge solve.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    _check_rank(r1, Y.shape[1])
    if U is None:
        U = ridge_solve(K, Y, lam)
    M = Y.T @ (_as_kernel_values(K) @ U)
    return _projection_from(M, r1)


def fit_hard_rank(data: Dataset, spec: KernelSpec, lam: float, r1: int, K=None) -> FittedModel:
    """Reduced-rank fit with coefficient rank at most ``r1``."""
    r1 = _check_rank(r1, data.p)
    if K is None:
        K = kernel_matrix(spec, data.X)
    U = ridge_solve(K, data.Y, lam)
    proj = build_projection(K, data.Y, lam, r1, U=U)
    coeff = (U @ proj.P_r1).T.copy()
    return FittedModel(
        coeff=coeff,
        Xtrain=data.X,
        kernel=spec,
        ridge=float(lam),
        method="hard_rank",
        rank=effective_rank(coeff),
        params={"r1": r1},
    )
