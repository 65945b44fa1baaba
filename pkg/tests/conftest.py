import numpy as np
import pytest

from entrochart import ChartDims, TimeSeries
from entrochart.noise import NoiseSpec, add_noise_step
from entrochart.raster import rasterize
from entrochart.series import CORRELATION_BASES, generate_base


def make_noisy_chart(index: int, steps: int = 40, dims: ChartDims = ChartDims(300, 200),
                     seed: int = 0):
    """A rasterized base curve with ``steps`` triangle-noise applications."""
    kind = CORRELATION_BASES[index % len(CORRELATION_BASES)]
    ps = rasterize(generate_base(kind, dims.width), dims)
    spec = NoiseSpec(sigma=float(np.std(ps.ys)))
    rng = np.random.default_rng([seed, index])
    for _ in range(steps):
        ps = add_noise_step(ps, spec, rng)
    return ps


@pytest.fixture(scope="session")
def noisy_corpus():
    """100 noisy charts spanning the four base curves and mixed noise counts."""
    return [make_noisy_chart(i, steps=20 + (i % 5) * 15, seed=17) for i in range(100)]


@pytest.fixture
def linear_series():
    return TimeSeries(np.arange(300.0), np.arange(300.0))
