import numpy as np
import pytest

from distreg.base_kernels import GaussianKernel, LinearKernel, PolynomialKernel
from distreg.embeddings import BagSample


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_bags(rng, l, n, d, scale=1.0, labels=True, vary_n=False):
    bags = []
    for _ in range(l):
        m = rng.integers(max(1, n // 2), n + 1) if vary_n else n
        pts = scale * rng.uniform(-1, 1, size=(m, d))
        bags.append(BagSample(pts, float(rng.normal()) if labels else None))
    return bags


ALL_KERNELS = [
    GaussianKernel(1.0),
    GaussianKernel(0.3),
    LinearKernel(2.0),
    PolynomialKernel(2, 1.0, 2.0),
    PolynomialKernel(3, 0.5, 2.0),
]
