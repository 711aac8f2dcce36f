"""Distribution regression with two-stage sampled mean embeddings."""

from .base_kernels import BaseKernel, GaussianKernel, LinearKernel, PolynomialKernel
from .dist_kernels import DistKernel, derive_constants, k_eval, outer_gram
from .embeddings import (
    BagSample,
    DiscreteDistribution,
    EmbeddingGram,
    concentration_bound,
    embed_inner,
    embedding_deviation_sq,
    embedding_gram,
    exact_embed_inner,
    mmd_sq,
)
from .merr import MerrModel, fit, load_model, operator_oracle_fit, predict, save_model, select_lambda

__version__ = "0.1.0"
