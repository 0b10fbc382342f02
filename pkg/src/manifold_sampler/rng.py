"""Counter-based Gaussian noise streams keyed by (seed, chain, step).

Each draw block is addressed directly through the Philox counter, so any
step of any chain can be regenerated without replaying the ones before it.
"""

from __future__ import annotations

import numpy as np


class NoiseStream:
    """Standard-normal blocks addressed by ``(chain, step)`` under one seed.

    Step 0 is reserved for the initial velocity draw; the Wiener increment of
    integration step ``l`` (1-based) lives at step ``l``.
    """

    def __init__(self, seed: int, chain: int = 0):
        self.seed = int(seed)
        self.chain = int(chain)
        self._key = np.random.SeedSequence(self.seed).generate_state(2, np.uint64)

    def generator(self, step: int) -> np.random.Generator:
        # high counter words select (chain, step); low words are free for the draw itself
        counter = np.array([0, 0, self.chain, step], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self._key, counter=counter))

    def normal(self, step: int, shape) -> np.ndarray:
        return self.generator(step).standard_normal(shape)

    def increment(self, step: int, shape, dr: float) -> np.ndarray:
        """Wiener increment with variance ``dr`` per entry."""
        return np.sqrt(dr) * self.normal(step, shape)
