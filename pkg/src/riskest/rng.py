"""Reproducible random streams.

Every random quantity in the package is drawn from a Philox generator keyed
by ``(seed, stream, *keys)``.  Philox is counter based, so the numbers drawn
for, say, repetition ``r`` and bootstrap block ``b`` depend only on those
indices and never on how work was scheduled across threads.

Gaussian variates come from numpy's ziggurat sampler
(``Generator.standard_normal``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_U64 = 2**64 - 1

# Stream tags used across the package.  Only their distinctness matters.
DATA = 0
BOOT = 1
ORACLE = 2
SCENARIO = 3
FOLDS = 4
INNER = 5


@dataclass(frozen=True)
class RngSeed:
    """A 64-bit seed plus a substream index."""

    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _MAX_U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def child(self, *keys: int) -> "RngSeed":
        """Derive a seed whose stream is a pure function of this one and ``keys``."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), *map(int, keys)))
        return RngSeed(int(self.seed), int(ss.generate_state(1, dtype=np.uint64)[0]))

    def generator(self, *keys: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), *map(int, keys)))
        return np.random.Generator(np.random.Philox(ss))


def as_generator(rng, *keys: int) -> np.random.Generator:
    """Coerce ``rng`` to a Generator.

    ``RngSeed`` values (and plain ints, read as ``RngSeed(int)``) are expanded
    with ``keys``; an existing Generator is returned unchanged.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        rng = RngSeed()
    elif isinstance(rng, (int, np.integer)):
        rng = RngSeed(int(rng))
    if not isinstance(rng, RngSeed):
        raise TypeError(f"cannot build a generator from {type(rng).__name__}")
    return rng.generator(*keys)


def as_seed(rng) -> RngSeed:
    if isinstance(rng, RngSeed):
        return rng
    if rng is None:
        return RngSeed()
    if isinstance(rng, (int, np.integer)):
        return RngSeed(int(rng))
    if isinstance(rng, np.random.Generator):
        return RngSeed(int(rng.integers(0, 2**63)))
    raise TypeError(f"cannot build a seed from {type(rng).__name__}")
