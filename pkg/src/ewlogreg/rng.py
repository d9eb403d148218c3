"""Reproducible random streams.

Every stochastic component draws from a Philox (counter-based) bit generator
seeded through :class:`numpy.random.SeedSequence`, so independent child
streams can be spawned from a single master seed.
"""

import numpy as np


def make_rng(seed):
    """Generator backed by Philox for an integer seed or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def spawn(seed, n):
    """``n`` statistically independent generators derived from ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(n)]
