import numpy as np
import pytest

from condu.ucore import Sample


def make_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@pytest.fixture
def rng():
    return make_rng(12345)


def random_sample(rng, n, x_lo=0.0, x_hi=1.0, y_sigma=0.5):
    x = rng.uniform(x_lo, x_hi, n)
    y = x + rng.normal(0.0, y_sigma, n)
    return Sample(x, y)
