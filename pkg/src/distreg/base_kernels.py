"""Pointwise positive-definite kernels on R^d with a certified diagonal bound.

Every kernel exposes ``b_k``, an upper bound on ``k(u, u)`` over the region
the kernel accepts inputs from. The Gaussian kernel is bounded everywhere;
the linear and polynomial kernels reject points outside a ball of radius
``radius_bound`` so that ``b_k`` stays finite.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionError, DomainError, NonFiniteInputError

_RADIUS_RTOL = 1e-12


def as_points(points, dim: Optional[int] = None) -> np.ndarray:
    """Coerce ``points`` to a finite ``(n, d)`` float64 array.

    A 1-d input is read as ``n`` scalar points.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise DimensionError(f"expected a 2-d array of points, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise DimensionError("empty point set")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionError(f"points have dimension {arr.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError("points contain NaN or infinity")
    return arr


class BaseKernel(ABC):
    """A bounded kernel ``k`` acting on raw points."""

    dim: Optional[int]

    @property
    @abstractmethod
    def b_k(self) -> float:
        """Certified supremum of ``k(u, u)`` over the accepted region."""

    @abstractmethod
    def _matrix(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        ...

    def _check(self, X: np.ndarray) -> None:
        pass

    def cross(self, X, Y) -> np.ndarray:
        """Matrix of ``k(x_i, y_j)`` between two point sets."""
        X = as_points(X, self.dim)
        Y = as_points(Y, self.dim)
        if X.shape[1] != Y.shape[1]:
            raise DimensionError(
                f"point sets have dimensions {X.shape[1]} and {Y.shape[1]}"
            )
        self._check(X)
        self._check(Y)
        return self._matrix(X, Y)

    def eval(self, u, v) -> float:
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        v = np.atleast_1d(np.asarray(v, dtype=np.float64))
        if u.ndim != 1 or v.ndim != 1:
            raise DimensionError("eval expects two single points")
        return float(self.cross(u[None, :], v[None, :])[0, 0])

    def gram(self, points) -> np.ndarray:
        X = as_points(points, self.dim)
        self._check(X)
        G = self._matrix(X, X)
        # the formulas are symmetric; enforce it against BLAS blocking
        return np.triu(G) + np.triu(G, 1).T


@dataclass(frozen=True)
class GaussianKernel(BaseKernel):
    """``k(u, v) = exp(-|u - v|^2 / (2 bandwidth^2))``; ``b_k = 1``."""

    bandwidth: float = 1.0
    dim: Optional[int] = None

    def __post_init__(self):
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError("bandwidth must be a positive finite number")

    @property
    def b_k(self) -> float:
        return 1.0

    def _matrix(self, X, Y):
        sq = cdist(X, Y, "sqeuclidean")
        return np.exp(-sq / (2.0 * self.bandwidth * self.bandwidth))


class _BallKernel(BaseKernel):
    radius_bound: float

    def _check(self, X):
        norms = np.sqrt(np.einsum("ij,ij->i", X, X))
        limit = self.radius_bound * (1.0 + _RADIUS_RTOL)
        if np.any(norms > limit):
            raise DomainError(
                f"point of norm {norms.max():.6g} outside the ball of radius "
                f"{self.radius_bound:.6g} on which b_k is certified"
            )


@dataclass(frozen=True)
class LinearKernel(_BallKernel):
    """``k(u, v) = <u, v>`` on the ball of radius ``radius_bound``."""

    radius_bound: float = 1.0
    dim: Optional[int] = None

    def __post_init__(self):
        if not (np.isfinite(self.radius_bound) and self.radius_bound > 0):
            raise ValueError("radius_bound must be a positive finite number")

    @property
    def b_k(self) -> float:
        return self.radius_bound**2

    def _matrix(self, X, Y):
        return X @ Y.T


@dataclass(frozen=True)
class PolynomialKernel(_BallKernel):
    """``k(u, v) = (<u, v> + offset)^degree`` on the ball of radius ``radius_bound``."""

    degree: int = 2
    offset: float = 1.0
    radius_bound: float = 1.0
    dim: Optional[int] = None

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("degree must be a positive integer")
        if self.offset < 0:
            raise ValueError("offset must be nonnegative")
        if not (np.isfinite(self.radius_bound) and self.radius_bound > 0):
            raise ValueError("radius_bound must be a positive finite number")

    @property
    def b_k(self) -> float:
        return (self.radius_bound**2 + self.offset) ** self.degree

    def _matrix(self, X, Y):
        return (X @ Y.T + self.offset) ** int(self.degree)

    def feature_map(self, points) -> np.ndarray:
        """Explicit features ``phi`` with ``k(u, v) = <phi(u), phi(v)>``.

        Built from the multinomial expansion of ``(<u, v> + offset)^degree``;
        the number of features is ``C(d + degree, degree)``.
        """
        from itertools import combinations_with_replacement
        from math import factorial

        X = as_points(points, self.dim)
        self._check(X)
        n, d = X.shape
        deg = int(self.degree)
        # augment with a constant coordinate sqrt(offset)
        Z = np.hstack([X, np.full((n, 1), np.sqrt(self.offset))])
        cols = []
        for combo in combinations_with_replacement(range(d + 1), deg):
            counts = np.bincount(combo, minlength=d + 1)
            coef = factorial(deg)
            for c in counts:
                coef //= factorial(int(c))
            cols.append(np.sqrt(coef) * np.prod(Z[:, list(combo)], axis=1))
        return np.column_stack(cols)


def kernel_from_spec(kind: str, **params) -> BaseKernel:
    """Build a base kernel from a kind name, as used by config files."""
    kind = kind.lower()
    if kind == "gaussian":
        return GaussianKernel(float(params.get("bandwidth", 1.0)), params.get("dim"))
    if kind == "linear":
        return LinearKernel(float(params.get("radius_bound", 1.0)), params.get("dim"))
    if kind == "polynomial":
        return PolynomialKernel(
            int(params.get("degree", 2)),
            float(params.get("offset", 1.0)),
            float(params.get("radius_bound", 1.0)),
            params.get("dim"),
        )
    raise ValueError(f"unknown base kernel kind {kind!r}")


def kernel_to_spec(kernel: BaseKernel) -> dict:
    if isinstance(kernel, GaussianKernel):
        spec = {"kind": "gaussian", "bandwidth": kernel.bandwidth}
    elif isinstance(kernel, LinearKernel):
        spec = {"kind": "linear", "radius_bound": kernel.radius_bound}
    elif isinstance(kernel, PolynomialKernel):
        spec = {
            "kind": "polynomial",
            "degree": int(kernel.degree),
            "offset": kernel.offset,
            "radius_bound": kernel.radius_bound,
        }
    else:
        raise TypeError(f"cannot serialize {type(kernel).__name__}")
    if kernel.dim is not None:
        spec["dim"] = kernel.dim
    return spec
