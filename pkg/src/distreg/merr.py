"""Mean-embedding ridge regression (MERR).

The estimator minimizes ``(1/l) sum_i (f(mu_i) - y_i)^2 + lam |f|^2`` over the
RKHS of the outer kernel. By the representer theorem ``f = sum_i alpha_i K(., mu_i)``
with

    (G + l * lam * I) alpha = y,

where ``G`` is the outer Gram matrix. The factor ``l`` comes from the
``1/l`` normalization of the empirical covariance operator;
:func:`operator_oracle_fit` solves the same problem directly in feature
coordinates and is used to pin it down in tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la

from .base_kernels import BaseKernel, kernel_from_spec, kernel_to_spec
from .dist_kernels import DistKernel, dist_kernel_from_spec, outer_cross, outer_gram
from .embeddings import BagSample, EmbeddingGram, cross_inner, embed_inner, embedding_gram
from .errors import DataError, DimensionError, SolveError
from .rng import derive_rng

MODEL_SCHEMA = "distreg.merr-model/1"
_MAX_FEATURES = 2000


def solve_ridge(G: np.ndarray, y: np.ndarray, ridge: float):
    """Solve ``(G + ridge I) x = y`` for PSD ``G`` by Cholesky.

    If the factorization fails, diagonal jitter starting at
    ``1e-12 * trace / n`` is added and raised tenfold up to
    ``1e-6 * trace / n``. Returns ``(x, jitter)``.
    """
    n = G.shape[0]
    A = G + ridge * np.eye(n)
    scale = max(np.trace(A) / n, np.finfo(float).tiny)
    jitters = [0.0] + [scale * 10.0**e for e in range(-12, -5)]
    for jitter in jitters:
        try:
            factor = la.cho_factor(A + jitter * np.eye(n), lower=True, check_finite=True)
        except la.LinAlgError:
            continue
        return la.cho_solve(factor, y), jitter
    cond = np.linalg.cond(A + jitters[-1] * np.eye(n))
    raise SolveError(
        f"Cholesky failed after jitter up to {jitters[-1]:.3e}; condition estimate {cond:.3e}",
        condition=cond,
    )


@dataclass(eq=False)
class MerrModel:
    alpha: np.ndarray
    train_bags: Sequence[BagSample]
    base: BaseKernel
    outer: DistKernel
    lam: float
    train_eg: EmbeddingGram
    jitter: float = 0.0

    @property
    def gram(self) -> np.ndarray:
        return outer_gram(self.outer, self.train_eg)

    def rkhs_norm_sq(self) -> float:
        """``|f|^2 = alpha^T G alpha``."""
        return float(self.alpha @ self.gram @ self.alpha)

    def predict(self, bags) -> np.ndarray:
        if isinstance(bags, BagSample):
            bags = [bags]
        return predict_many(self, bags)


def _labels(bags: Sequence[BagSample]) -> np.ndarray:
    y = np.array([np.nan if b.label is None else b.label for b in bags])
    if not np.all(np.isfinite(y)):
        raise ValueError("all training bags need a finite label")
    return y


def fit_gram(G: np.ndarray, y: np.ndarray, lam: float):
    """Dual coefficients for a precomputed outer Gram. Returns ``(alpha, jitter)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    l = G.shape[0]
    return solve_ridge(G, np.asarray(y, dtype=np.float64), l * lam)


def fit(
    bags: Sequence[BagSample],
    base: BaseKernel,
    outer: DistKernel,
    lam: float,
    eg: Optional[EmbeddingGram] = None,
) -> MerrModel:
    """Fit MERR on labeled bags. A precomputed embedding Gram may be passed as ``eg``."""
    bags = list(bags)
    if not bags:
        raise ValueError("need at least one training bag")
    dims = {b.dim for b in bags}
    if len(dims) != 1:
        raise DimensionError(f"training bags have mixed dimensions {sorted(dims)}")
    y = _labels(bags)
    if eg is None:
        eg = embedding_gram(base, bags)
    alpha, jitter = fit_gram(outer_gram(outer, eg), y, lam)
    return MerrModel(alpha, bags, base, outer, float(lam), eg, jitter)


def predict_from_inner(model: MerrModel, inner_to_train: np.ndarray, sq_norms) -> np.ndarray:
    """Predictions given ``<mu_test_j, mu_train_i>`` (shape ``(m, l)``) and test squared norms."""
    inner_to_train = np.atleast_2d(inner_to_train)
    Kx = outer_cross(model.outer, inner_to_train, np.atleast_1d(sq_norms), model.train_eg.sq_norms)
    return Kx @ model.alpha


def predict_many(model: MerrModel, bags: Sequence[BagSample]) -> np.ndarray:
    bags = list(bags)
    train_dim = model.train_bags[0].dim
    for b in bags:
        if b.dim != train_dim:
            raise DimensionError(f"bag has dimension {b.dim}, model expects {train_dim}")
    inner = cross_inner(model.base, bags, model.train_bags)
    sq = np.array([embed_inner(model.base, b, b) for b in bags])
    return predict_from_inner(model, inner, sq)


def predict(model: MerrModel, bag: BagSample) -> float:
    return float(predict_many(model, [bag])[0])


def operator_oracle_fit(features: np.ndarray, y, lam: float) -> np.ndarray:
    """Solve ``(T + lam I) f = g`` in explicit feature coordinates.

    ``features`` holds one row ``Phi_i`` per bag; ``T = (1/l) sum Phi_i Phi_i^T``
    and ``g = (1/l) sum Phi_i y_i``. Only meant as a test oracle for :func:`fit`.
    """
    Phi = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    l, dim = Phi.shape
    if dim > _MAX_FEATURES:
        raise ValueError(f"feature dimension {dim} exceeds {_MAX_FEATURES}")
    if y.shape[0] != l:
        raise DimensionError("features and labels differ in length")
    T = Phi.T @ Phi / l
    g = Phi.T @ y / l
    return np.linalg.solve(T + lam * np.eye(dim), g)


def mean_features(kernel, bags: Sequence[BagSample]) -> np.ndarray:
    """Explicit mean embeddings (rows) for a kernel with a finite feature map."""
    return np.vstack([kernel.feature_map(b.points).mean(axis=0) for b in bags])


def fold_partition(l: int, folds: int, seed: int):
    rng = derive_rng(seed, "cv-folds")
    return np.array_split(rng.permutation(l), folds)


def cv_scores_gram(G: np.ndarray, y: np.ndarray, grid, folds: int, seed: int) -> np.ndarray:
    """Mean held-out squared error for each ``lam`` in ``grid`` over seeded folds."""
    l = G.shape[0]
    parts = fold_partition(l, folds, seed)
    scores = np.zeros(len(grid))
    for k, lam in enumerate(grid):
        errs = []
        for test in parts:
            train = np.setdiff1d(np.arange(l), test)
            alpha, _ = fit_gram(G[np.ix_(train, train)], y[train], lam)
            pred = G[np.ix_(test, train)] @ alpha
            errs.append(np.mean((pred - y[test]) ** 2))
        scores[k] = np.mean(errs)
    return scores


def pick_lambda(grid, scores) -> float:
    """Grid minimizer of ``scores``; ties go to the larger ``lam``."""
    grid = np.asarray(grid, dtype=np.float64)
    scores = np.asarray(scores)
    best = scores.min()
    tied = np.abs(scores - best) <= 1e-12 * max(abs(best), 1e-300)
    return float(grid[tied].max())


def select_lambda(
    bags: Sequence[BagSample],
    base: BaseKernel,
    outer: DistKernel,
    grid,
    folds: int = 5,
    seed: int = 0,
    eg: Optional[EmbeddingGram] = None,
):
    """K-fold cross-validation over a fixed grid. Returns ``(lam, scores)``."""
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty lambda grid")
    if any(g <= 0 for g in grid):
        raise ValueError("lambda grid must be positive")
    bags = list(bags)
    if folds < 2 or len(bags) < folds:
        raise ValueError("need 2 <= folds <= number of bags")
    if len(grid) == 1:
        return grid[0], np.array([np.nan])
    if eg is None:
        eg = embedding_gram(base, bags)
    G = outer_gram(outer, eg)
    scores = cv_scores_gram(G, _labels(bags), grid, folds, seed)
    return pick_lambda(grid, scores), scores


# -- persistence -----------------------------------------------------------


def model_to_dict(model: MerrModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "base_kernel": kernel_to_spec(model.base),
        "outer_kernel": model.outer.to_spec(),
        "lambda": model.lam,
        "jitter": model.jitter,
        "alpha": model.alpha.tolist(),
        "embedding_inner": model.train_eg.inner.tolist(),
        "bags": [{"label": b.label, "points": b.points.tolist()} for b in model.train_bags],
    }


def model_from_dict(data: dict) -> MerrModel:
    if data.get("schema") != MODEL_SCHEMA:
        raise DataError(f"unsupported model schema {data.get('schema')!r}")
    base_spec = dict(data["base_kernel"])
    base = kernel_from_spec(base_spec.pop("kind"), **base_spec)
    outer_spec = dict(data["outer_kernel"])
    outer_kind = outer_spec.pop("kind")
    outer = dist_kernel_from_spec(outer_kind, base.b_k, **outer_spec)
    bags = [BagSample(np.array(b["points"], dtype=np.float64), b["label"]) for b in data["bags"]]
    eg = EmbeddingGram(np.array(data["embedding_inner"], dtype=np.float64), base)
    return MerrModel(
        np.array(data["alpha"], dtype=np.float64),
        bags,
        base,
        outer,
        float(data["lambda"]),
        eg,
        float(data.get("jitter", 0.0)),
    )


def save_model(model: MerrModel, path) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> MerrModel:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(data)
