"""Outer kernels ``K`` acting on mean embeddings.

``K`` is evaluated purely from embedding inner products, so after one pass
over the raw bags the cost of any Gram matrix is quadratic in the number of
bags. Each kernel carries the constants the excess-risk bound needs: ``b_K``
and the Hoelder pair ``(L, h)`` of the feature map ``mu -> K(., mu)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .embeddings import EmbeddingGram
from .errors import CorruptGramError

_CS_TOL = 1e-6


def derive_constants(kind: str, base_b_k: float, outer_bandwidth: float = 1.0) -> Tuple[float, float, float]:
    """Return ``(b_K, L, h)`` for an outer kernel over a base kernel bounded by ``base_b_k``.

    Linear: ``|K(., a) - K(., b)|^2 = |a - b|^2`` so ``L = h = 1`` and
    ``b_K = base_b_k``. Gaussian on the MMD: ``2 - 2 exp(-t^2 / (2 s^2)) <= t^2 / s^2``
    gives ``L = 1 / s``, ``h = 1`` and ``b_K = 1``.
    """
    kind = kind.lower()
    if kind == "linear":
        return float(base_b_k), 1.0, 1.0
    if kind == "gaussian":
        return 1.0, 1.0 / float(outer_bandwidth), 1.0
    raise ValueError(f"unknown outer kernel kind {kind!r}")


@dataclass(frozen=True)
class DistKernel:
    kind: str
    b_K: float
    holder_L: float
    holder_h: float
    outer_bandwidth: float = 1.0

    @classmethod
    def linear(cls, base_b_k: float) -> "DistKernel":
        return cls("linear", *derive_constants("linear", base_b_k))

    @classmethod
    def gaussian(cls, outer_bandwidth: float) -> "DistKernel":
        if not outer_bandwidth > 0:
            raise ValueError("outer_bandwidth must be positive")
        return cls(
            "gaussian", *derive_constants("gaussian", 1.0, outer_bandwidth), outer_bandwidth
        )

    def from_inner(self, ab, aa, bb):
        """Vectorized ``K`` from inner products ``<a,b>``, ``<a,a>``, ``<b,b>``."""
        ab = np.asarray(ab, dtype=np.float64)
        aa = np.asarray(aa, dtype=np.float64)
        bb = np.asarray(bb, dtype=np.float64)
        if np.any(aa < -_CS_TOL) or np.any(bb < -_CS_TOL):
            raise CorruptGramError("negative squared norm in embedding Gram")
        excess = ab * ab - np.clip(aa, 0, None) * np.clip(bb, 0, None)
        if np.any(excess > _CS_TOL):
            raise CorruptGramError(
                f"Cauchy-Schwarz violated by {float(np.max(excess)):.3e}"
            )
        if self.kind == "linear":
            return ab
        sq = np.clip(aa - 2.0 * ab + bb, 0.0, None)
        return np.exp(-sq / (2.0 * self.outer_bandwidth**2))

    def to_spec(self) -> dict:
        if self.kind == "linear":
            return {"kind": "linear", "b_K": self.b_K}
        return {"kind": "gaussian", "outer_bandwidth": self.outer_bandwidth}


def k_eval(K: DistKernel, gram_ab: float, gram_aa: float, gram_bb: float) -> float:
    return float(K.from_inner(gram_ab, gram_aa, gram_bb))


def outer_gram(K: DistKernel, eg: EmbeddingGram) -> np.ndarray:
    """``G_ij = K(mu_i, mu_j)`` from an embedding Gram."""
    d = eg.sq_norms
    G = K.from_inner(eg.inner, d[:, None], d[None, :])
    return np.array(G, dtype=np.float64, copy=True)


def outer_cross(K: DistKernel, inner_ab, sq_a, sq_b) -> np.ndarray:
    """Rectangular ``K(mu_a_i, mu_b_j)`` from cross inner products and squared norms."""
    sq_a = np.asarray(sq_a, dtype=np.float64)
    sq_b = np.asarray(sq_b, dtype=np.float64)
    return np.asarray(K.from_inner(inner_ab, sq_a[:, None], sq_b[None, :]))


def feature_distance(K: DistKernel, gram_ab: float, gram_aa: float, gram_bb: float) -> float:
    """``|K(., a) - K(., b)|`` via ``K(a,a) - 2K(a,b) + K(b,b)``."""
    kab = k_eval(K, gram_ab, gram_aa, gram_bb)
    kaa = k_eval(K, gram_aa, gram_aa, gram_aa)
    kbb = k_eval(K, gram_bb, gram_bb, gram_bb)
    return math.sqrt(max(kaa - 2.0 * kab + kbb, 0.0))


def dist_kernel_from_spec(kind: str, base_b_k: float, **params) -> DistKernel:
    kind = kind.lower()
    if kind == "linear":
        return DistKernel.linear(base_b_k)
    if kind == "gaussian":
        return DistKernel.gaussian(float(params.get("outer_bandwidth", 1.0)))
    raise ValueError(f"unknown outer kernel kind {kind!r}")
