import numpy as np
import pytest

from vlc5g.distributions import TLocationScaleParams

# Reference t-location-scale fits: 5G link and end-to-end system.
FIVEG = TLocationScaleParams(0.0088, 7.43e-4, 1.09)
OVERALL = TLocationScaleParams(0.0119, 0.001, 1.253)


@pytest.fixture
def rng():
    return np.random.default_rng(20201016)


def positive_draws(p, seed, n):
    """``n`` draws from ``p`` conditioned on x > 0 (latencies cannot be negative)."""
    from vlc5g.distributions import tls_sample

    rng = np.random.default_rng(seed)
    out = np.empty(0)
    while out.size < n:
        x = tls_sample(p, rng, 2 * n)
        out = np.concatenate([out, x[x > 0]])
    return out[:n]
