"""Isotropic Matern kernel with half-integer Bessel order.

The kernel is

    psi(r) = r**m * K_m(r) / (Gamma(m) * 2**(m - 1)),    m = nu - d/2,

evaluated on raw Euclidean distances (no lengthscale). Only half-integer
orders ``m = k + 1/2`` are supported; ``K_m`` is then built from the
closed form of ``K_{1/2}`` by upward recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "KernelSpec",
    "KernelMatrix",
    "UnsupportedOrderError",
    "matern_eval",
    "kernel_matrix",
    "kernel_cross",
    "bessel_k_half_integer",
]

# Distances below this are snapped to zero (psi(0) == 1 exactly).
ZERO_DISTANCE = 1e-12


class UnsupportedOrderError(ValueError):
    """Raised when the Bessel order ``nu - d/2`` is not a positive half-integer."""


@dataclass(frozen=True)
class KernelSpec:
    """Matern smoothness ``nu`` on inputs of dimension ``dim``."""

    nu: float
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if not self.nu > self.dim / 2:
            raise ValueError(f"nu must exceed dim/2 = {self.dim / 2}, got {self.nu}")
        twice = 2.0 * self.order
        if abs(twice - round(twice)) > 1e-12 or round(twice) % 2 != 1:
            raise UnsupportedOrderError(
                f"Bessel order nu - d/2 = {self.order} is not a half-integer"
            )

    @property
    def order(self) -> float:
        return self.nu - self.dim / 2.0

    @property
    def half_steps(self) -> int:
        """Number of recurrence steps from order 1/2, i.e. ``m - 1/2``."""
        return int(round(self.order - 0.5))

    @classmethod
    def default(cls, dim: int) -> "KernelSpec":
        """Smoothness ``nu = 3.5 + d/2`` (Bessel order 7/2)."""
        return cls(nu=3.5 + dim / 2.0, dim=dim)


@dataclass(frozen=True)
class KernelMatrix:
    values: np.ndarray
    trace: float
    jitter_applied: float = 0.0

    @property
    def n(self) -> int:
        return self.values.shape[0]


def bessel_k_half_integer(k: int, r):
    """Modified Bessel function of the second kind of order ``k + 1/2``.

    Parameters
    ----------
    k : int
        Non-negative integer; the order is ``k + 1/2``.
    r : array_like
        Strictly positive arguments.

    Returns
    -------
    ndarray
        ``K_{k+1/2}(r)``.
    """
    r = np.asarray(r, dtype=float)
    prev = np.sqrt(np.pi / (2.0 * r)) * np.exp(-r)  # K_{-1/2} = K_{1/2}
    cur = prev.copy()
    order = 0.5
    for _ in range(k):
        prev, cur = cur, prev + (2.0 * order / r) * cur
        order += 1.0
    return cur


def _psi(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    pos = r >= ZERO_DISTANCE
    if np.any(pos):
        m = spec.order
        rp = r[pos]
        norm = math.gamma(m) * 2.0 ** (m - 1.0)
        out[pos] = rp**m * bessel_k_half_integer(spec.half_steps, rp) / norm
    return out


def matern_eval(spec: KernelSpec, r):
    """Evaluate the Matern kernel at distance(s) ``r``.

    Scalar input gives a float, array input an array of the same shape.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(np.isnan(arr)):
        raise ValueError("distance must not be NaN")
    if np.any(arr < 0):
        raise ValueError("distance must be non-negative")
    vals = _psi(spec, arr)
    if np.ndim(r) == 0:
        return float(vals)
    return vals


def _as_inputs(X, spec: KernelSpec, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if spec.dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != spec.dim:
        raise ValueError(
            f"{name} must have {spec.dim} columns, got shape {np.shape(X)}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def kernel_matrix(spec: KernelSpec, X) -> KernelMatrix:
    """Gram matrix ``K[j, k] = psi(|x_j - x_k|)`` on the rows of ``X``."""
    X = _as_inputs(X, spec, "X")
    n = X.shape[0]
    if n < 1:
        raise ValueError("X must have at least one row")
    iu = np.triu_indices(n, k=1)
    dist = cdist(X, X)[iu]
    K = np.eye(n)
    K[iu] = _psi(spec, dist)
    K.T[iu] = K[iu]
    return KernelMatrix(values=K, trace=float(n))


def kernel_cross(spec: KernelSpec, Xnew, Xtrain) -> np.ndarray:
    """Cross-kernel ``(q, n)`` matrix between new and training inputs."""
    Xnew = _as_inputs(Xnew, spec, "Xnew")
    Xtrain = _as_inputs(Xtrain, spec, "Xtrain")
    return _psi(spec, cdist(Xnew, Xtrain))
