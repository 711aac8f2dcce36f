import math

import numpy as np
import pytest

from distreg.base_kernels import GaussianKernel, PolynomialKernel
from distreg.dist_kernels import DistKernel, derive_constants, feature_distance, k_eval, outer_gram
from distreg.embeddings import BagSample, embed_inner, embedding_gram, mmd_sq
from distreg.errors import CorruptGramError

from conftest import random_bags

G1 = GaussianKernel(1.0)


def test_k_eval_examples():
    assert k_eval(DistKernel.linear(1.0), 0.37, 0.5, 0.5) == 0.37
    assert k_eval(DistKernel.gaussian(1.0), 0.6, 0.6, 0.6) == 1.0


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_point_mass_bags_give_gaussian_in_means(sigma, rng):
    k = GaussianKernel(sigma)
    K = DistKernel.linear(k.b_k)
    for _ in range(5):
        mi, mj = rng.normal(size=(2, 2))
        A, B = BagSample([mi]), BagSample([mj])
        val = k_eval(K, embed_inner(k, A, B), embed_inner(k, A, A), embed_inner(k, B, B))
        c = 1 / (2 * sigma**2)
        assert val == pytest.approx(math.exp(-c * np.sum((mi - mj) ** 2)), rel=1e-14)


def test_derive_constants_linear(rng):
    assert derive_constants("linear", 1.0) == (1.0, 1.0, 1.0)
    K = DistKernel.linear(1.0)
    for _ in range(20):
        A, B = random_bags(rng, 2, 10, 2)
        ab, aa, bb = embed_inner(G1, A, B), embed_inner(G1, A, A), embed_inner(G1, B, B)
        assert feature_distance(K, ab, aa, bb) ** 2 == pytest.approx(mmd_sq(G1, A, B), abs=1e-14)


@pytest.mark.parametrize("sigma,expected", [(2.0, (1.0, 0.5, 1.0)), (1.0, (1.0, 1.0, 1.0))])
def test_derive_constants_gaussian(sigma, expected):
    assert derive_constants("gaussian", 3.0, sigma) == expected
    t = np.linspace(0, 10, 2001)
    assert np.all(2 - 2 * np.exp(-(t**2) / (2 * sigma**2)) <= t**2 / sigma**2 + 1e-15)


@pytest.mark.parametrize(
    "K", [DistKernel.linear(1.0), DistKernel.gaussian(0.3), DistKernel.gaussian(1.0)]
)
def test_holder_certificate(K, rng):
    for _ in range(500):
        A, B = random_bags(rng, 2, 5, 2, scale=rng.uniform(0.1, 2))
        ab, aa, bb = embed_inner(G1, A, B), embed_inner(G1, A, A), embed_inner(G1, B, B)
        lhs = feature_distance(K, ab, aa, bb)
        assert lhs <= K.holder_L * math.sqrt(mmd_sq(G1, A, B)) ** K.holder_h + 1e-9
        val = k_eval(K, ab, aa, bb)
        if K.kind == "gaussian":
            assert 0 < val <= 1
        else:
            assert abs(val) <= K.b_K


def test_outer_gram_linear_equals_inner(rng):
    eg = embedding_gram(G1, random_bags(rng, 8, 6, 2))
    np.testing.assert_array_equal(outer_gram(DistKernel.linear(1.0), eg), eg.inner)


def test_outer_gram_gaussian(rng):
    K = DistKernel.gaussian(0.7)
    eg = embedding_gram(G1, random_bags(rng, 1, 6, 2))
    assert outer_gram(K, eg).tolist() == [[1.0]]
    bags = random_bags(rng, 20, 6, 2, vary_n=True)
    G = outer_gram(K, embedding_gram(G1, bags))
    oracle = np.array([[math.exp(-mmd_sq(G1, a, b) / (2 * 0.7**2)) for b in bags] for a in bags])
    np.testing.assert_allclose(G, oracle, rtol=1e-12)


@pytest.mark.parametrize("K", [DistKernel.linear(1.0), DistKernel.gaussian(0.5)])
@pytest.mark.parametrize("l", [5, 64])
def test_outer_gram_psd(K, l, rng):
    G = outer_gram(K, embedding_gram(G1, random_bags(rng, l, 4, 2)))
    assert np.linalg.eigvalsh(G).min() >= -1e-8 * np.trace(G)
    assert np.all(np.diag(G) <= K.b_K + 1e-12)


def test_corrupt_gram_rejected():
    with pytest.raises(CorruptGramError):
        k_eval(DistKernel.gaussian(1.0), 2.0, 1.0, 1.0)
    with pytest.raises(CorruptGramError):
        k_eval(DistKernel.linear(1.0), 0.5, -0.1, 1.0)


def test_polynomial_linear_bound():
    k = PolynomialKernel(2, 1.0, 2.0)
    assert DistKernel.linear(k.b_k).b_K == 25.0
