import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from distreg.base_kernels import (
    GaussianKernel,
    LinearKernel,
    PolynomialKernel,
    kernel_from_spec,
    kernel_to_spec,
)
from distreg.errors import DimensionError, DomainError, NonFiniteInputError

from conftest import ALL_KERNELS


def brute_force(kernel, u, v):
    u = [float(x) for x in u]
    v = [float(x) for x in v]
    if isinstance(kernel, GaussianKernel):
        sq = sum((a - b) ** 2 for a, b in zip(u, v))
        return math.exp(-sq / (2 * kernel.bandwidth**2))
    dot = sum(a * b for a, b in zip(u, v))
    if isinstance(kernel, LinearKernel):
        return dot
    return (dot + kernel.offset) ** kernel.degree


def test_gaussian_examples():
    k = GaussianKernel(1.0)
    assert k.eval([0, 0], [0, 0]) == 1.0
    assert k.eval([0.0], [2.0]) == pytest.approx(math.exp(-2.0), rel=1e-15)
    np.testing.assert_allclose(
        k.gram([[0.0], [2.0]]), [[1, math.exp(-2)], [math.exp(-2), 1]], rtol=1e-15
    )
    assert k.gram([[0.0]]).tolist() == [[1.0]]


def test_linear_orthogonal():
    assert LinearKernel(2.0).eval([1, 1], [1, -1]) == 0.0


@pytest.mark.parametrize("kernel", ALL_KERNELS)
def test_gram_matches_double_loop(kernel, rng):
    pts = rng.uniform(-1, 1, size=(50, 2))
    G = kernel.gram(pts)
    oracle = np.array([[brute_force(kernel, p, q) for q in pts] for p in pts])
    np.testing.assert_allclose(G, oracle, rtol=1e-14, atol=1e-15)
    assert np.array_equal(G, G.T)
    assert np.all(np.diag(G) <= kernel.b_k * (1 + 1e-12))


@pytest.mark.parametrize("kernel", ALL_KERNELS)
def test_eval_symmetric_bitwise(kernel, rng):
    for _ in range(1000):
        u, v = rng.uniform(-1, 1, size=(2, 3))
        assert kernel.eval(u, v) == kernel.eval(v, u)


@pytest.mark.parametrize("kernel", ALL_KERNELS)
def test_gram_psd(kernel, rng):
    pts = rng.uniform(-1, 1, size=(64, 2))
    G = kernel.gram(pts)
    assert np.linalg.eigvalsh(G).min() >= -1e-8 * np.trace(G)


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, (2, 3), elements=st.floats(-1, 1)),
    st.floats(0.05, 10),
)
def test_gaussian_range(pair, bw):
    val = GaussianKernel(bw).eval(pair[0], pair[1])
    assert 0.0 <= val <= 1.0


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (2, 2), elements=st.floats(-1.4, 1.4)))
def test_linear_bound(pair):
    k = LinearKernel(2.0)
    assert abs(k.eval(pair[0], pair[1])) <= k.b_k


def test_polynomial_feature_map_reproduces_kernel(rng):
    k = PolynomialKernel(2, 1.5, 2.0)
    pts = rng.uniform(-1, 1, size=(20, 2))
    Phi = k.feature_map(pts)
    assert Phi.shape == (20, 6)
    np.testing.assert_allclose(Phi @ Phi.T, k.gram(pts), rtol=1e-12)


def test_errors():
    with pytest.raises(DimensionError):
        GaussianKernel(1.0).eval([0, 0], [0, 0, 0])
    with pytest.raises(DimensionError):
        GaussianKernel(1.0, dim=2).gram([[0.0, 1.0, 2.0]])
    with pytest.raises(NonFiniteInputError):
        GaussianKernel(1.0).eval([np.nan], [0.0])
    with pytest.raises(DomainError):
        LinearKernel(1.0).eval([2.0, 0.0], [0.0, 0.0])
    with pytest.raises(DomainError):
        PolynomialKernel(2, 1.0, 1.0).gram([[1.0, 1.0]])
    with pytest.raises(ValueError):
        GaussianKernel(-1.0)


@pytest.mark.parametrize("kernel", ALL_KERNELS)
def test_spec_round_trip(kernel):
    spec = kernel_to_spec(kernel)
    assert kernel_from_spec(spec.pop("kind"), **spec) == kernel
