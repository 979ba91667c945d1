"""Reproducible, splittable random streams.

A stream is identified by ``(seed, stream_id)`` and backed by numpy's
counter-based Philox generator keyed through ``SeedSequence``; distinct
stream ids give independent streams, so replicate ``m`` of an experiment can
run on any worker and still draw the same numbers.
"""

import os

import numpy as np

from . import _config


def default_seed(seed=None):
    """``seed`` if given, else ``$HIGHCONC_SEED``, else 0."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(_config.SEED_ENV)
    return int(env) if env else 0


class SeededStream:
    def __init__(self, seed=0, stream_id=0):
        self.seed = int(seed) & (2**64 - 1)
        self.stream_id = int(stream_id) & (2**64 - 1)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._bitgen = np.random.Philox(ss)
        self.generator = np.random.Generator(self._bitgen)

    def __repr__(self):
        return "SeededStream(seed=%d, stream_id=%d)" % (self.seed, self.stream_id)

    @property
    def counter(self):
        """Philox counter words; advances as numbers are drawn."""
        return self._bitgen.state["state"]["counter"].copy()

    def substream(self, stream_id):
        return SeededStream(self.seed, stream_id)

    def random(self, size=None):
        return self.generator.random(size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)
