"""Kernel mean embeddings of bags and discrete distributions.

Embeddings are never materialized: a bag is kept as its points and all RKHS
geometry is computed from kernel sums,

    <mu_A, mu_B> = (1 / (N_A N_B)) sum_n sum_m k(a_n, b_m).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .base_kernels import BaseKernel, as_points
from .errors import DimensionError, NotNormalizedError

# rows per block when summing large cross-kernel matrices
_BLOCK = 2048
_NEG_FLAG = -1e-9


@dataclass(eq=False)
class BagSample:
    """One input distribution observed through ``N`` points, with optional label."""

    points: np.ndarray
    label: Optional[float] = None
    bag_id: Optional[str] = None

    def __post_init__(self):
        self.points = as_points(self.points)
        if self.label is not None:
            self.label = float(self.label)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(eq=False)
class DiscreteDistribution:
    """Finitely supported distribution, used as exact ground truth."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self.support = as_points(self.support)
        self.probs = np.asarray(self.probs, dtype=np.float64).ravel()
        if self.probs.shape[0] != self.support.shape[0]:
            raise DimensionError("support and probs differ in length")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise NotNormalizedError(
                f"probabilities must be nonnegative and sum to 1 (sum={self.probs.sum()!r})"
            )

    @classmethod
    def uniform(cls, support) -> "DiscreteDistribution":
        support = as_points(support)
        n = support.shape[0]
        return cls(support, np.full(n, 1.0 / n))

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(self.support.shape[0], size=n, p=self.probs)

    def sample(self, rng: np.random.Generator, n: int, label=None) -> BagSample:
        return BagSample(self.support[self.sample_indices(rng, n)], label)


@dataclass(eq=False)
class EmbeddingGram:
    """Pairwise inner products ``<mu_i, mu_j>`` between bag embeddings."""

    inner: np.ndarray
    base: BaseKernel
    sq_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        self.sq_norms = np.diag(self.inner).copy()

    def __len__(self):
        return self.inner.shape[0]


Embeddable = Union[BagSample, DiscreteDistribution]


def _points_weights(obj: Embeddable):
    if isinstance(obj, DiscreteDistribution):
        return obj.support, obj.probs
    if isinstance(obj, BagSample):
        return obj.points, None
    return as_points(obj), None


def _weighted_inner(kernel: BaseKernel, X, wx, Y, wy) -> float:
    """``wx^T K(X, Y) wy``; ``None`` weights mean uniform."""
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"bags have dimensions {X.shape[1]} and {Y.shape[1]}")
    total = 0.0
    for start in range(0, X.shape[0], _BLOCK):
        block = kernel.cross(X[start : start + _BLOCK], Y)
        col = block.mean(axis=1) if wy is None else block @ wy
        if wx is None:
            total += col.sum()
        else:
            total += col @ wx[start : start + _BLOCK]
    if wx is None:
        total /= X.shape[0]
    return float(total)


def embed_inner(kernel: BaseKernel, bag_a: Embeddable, bag_b: Embeddable) -> float:
    """RKHS inner product of the (empirical) mean embeddings of two bags."""
    X, wx = _points_weights(bag_a)
    Y, wy = _points_weights(bag_b)
    return _weighted_inner(kernel, X, wx, Y, wy)


def embedding_gram(kernel: BaseKernel, bags: Sequence[BagSample]) -> EmbeddingGram:
    """Inner-product matrix of bag embeddings; each pair is computed once."""
    bags = list(bags)
    if not bags:
        raise ValueError("need at least one bag")
    l = len(bags)
    inner = np.empty((l, l))
    for i in range(l):
        for j in range(i, l):
            inner[i, j] = inner[j, i] = embed_inner(kernel, bags[i], bags[j])
    return EmbeddingGram(inner, kernel)


def cross_inner(kernel: BaseKernel, bags_a, bags_b) -> np.ndarray:
    """Rectangular matrix ``<mu_a_i, mu_b_j>`` between two bag lists."""
    out = np.empty((len(bags_a), len(bags_b)))
    for i, a in enumerate(bags_a):
        for j, b in enumerate(bags_b):
            out[i, j] = embed_inner(kernel, a, b)
    return out


def _clamped_sq(value: float, what: str) -> float:
    if value < _NEG_FLAG:
        warnings.warn(
            f"{what} evaluated to {value:.3e}; cancellation this large suggests a bug",
            RuntimeWarning,
            stacklevel=3,
        )
    return max(value, 0.0)


def mmd_sq(kernel: BaseKernel, bag_a: Embeddable, bag_b: Embeddable) -> float:
    """Squared RKHS distance between two embeddings, clamped at zero."""
    value = (
        embed_inner(kernel, bag_a, bag_a)
        - 2.0 * embed_inner(kernel, bag_a, bag_b)
        + embed_inner(kernel, bag_b, bag_b)
    )
    return _clamped_sq(value, "mmd_sq")


def exact_embed_inner(
    kernel: BaseKernel, dist: DiscreteDistribution, other: Embeddable
) -> float:
    """Inner product of a discrete distribution's exact embedding with a bag or distribution."""
    if not isinstance(dist, DiscreteDistribution):
        raise TypeError("dist must be a DiscreteDistribution")
    return embed_inner(kernel, dist, other)


def embedding_deviation_sq(
    kernel: BaseKernel, dist: DiscreteDistribution, bag: BagSample
) -> float:
    """``|mu_bag - mu_dist|^2`` using the exact embedding of ``dist``."""
    value = (
        exact_embed_inner(kernel, dist, dist)
        - 2.0 * exact_embed_inner(kernel, dist, bag)
        + embed_inner(kernel, bag, bag)
    )
    return _clamped_sq(value, "embedding_deviation_sq")


def concentration_bound(b_k: float, n: int, alpha: float) -> float:
    """Radius ``(1 + sqrt(alpha)) sqrt(2 b_k) / sqrt(n)``.

    The empirical embedding of ``n`` i.i.d. draws lies within this RKHS
    distance of the true embedding with probability at least
    ``1 - exp(-alpha)``. ``alpha = 0`` gives the bound on the expected
    deviation.
    """
    if not b_k > 0:
        raise ValueError("b_k must be positive")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if not alpha >= 0:
        raise ValueError("alpha must be nonnegative")
    return (1.0 + math.sqrt(alpha)) * math.sqrt(2.0 * b_k) / math.sqrt(n)


def n_min(bags: Sequence[BagSample]) -> int:
    """Smallest bag size, the ``N`` that bounds are evaluated at."""
    return min(b.n for b in bags)
