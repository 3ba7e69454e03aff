"""Deterministic, labeled random streams.

Every piece of randomness in the package flows through one root seed plus a
path of string/int labels, so any subsystem's stream can be reproduced in
isolation (the HTTP service and the in-process evaluator must derive the
exact same streams from the same seed).
"""

from __future__ import annotations

import zlib

import numpy as np


def _entropy(part) -> int:
    if isinstance(part, str):
        # crc32 is stable across platforms and Python versions.
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & 0xFFFFFFFFFFFFFFFF


def seed_sequence(seed: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence([_entropy(seed)] + [_entropy(l) for l in labels])


def stream(seed: int, *labels) -> np.random.Generator:
    """A fresh PCG64 generator for the given seed and label path."""
    return np.random.default_rng(seed_sequence(seed, *labels))


class EpisodeStreams:
    """The independent streams one dialog episode draws from.

    Label layout is part of the wire-level determinism contract: a scripted
    witness talking to the HTTP service rebuilds these streams client-side.
    ``scope`` namespaces episodes within a larger run (training epochs).
    """

    def __init__(self, seed: int, index: int = 0, scope: tuple = ()):
        self.seed = int(seed)
        self.index = int(index)
        self.scope = tuple(scope)

    def _make(self, label: str) -> np.random.Generator:
        return stream(self.seed, *self.scope, "episode", self.index, label)

    def target(self) -> np.random.Generator:
        return self._make("target")

    def plan(self) -> np.random.Generator:
        return self._make("plan")

    def init(self) -> np.random.Generator:
        return self._make("init")

    def policy(self) -> np.random.Generator:
        return self._make("policy")

    def negative(self) -> np.random.Generator:
        return self._make("negative")
