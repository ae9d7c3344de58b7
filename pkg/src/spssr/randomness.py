"""Injectable randomness: explicit streams for golden tests, seeded PRNGs otherwise.

A source hands out 0/1 bits (query coefficients) and uniform field symbols
(messages and keys). Sources are single-consumer objects.
"""

from __future__ import annotations

import random
from collections.abc import Iterable

from .errors import ExhaustedRandomness, OutOfRange


class RandomSource:
    def bits(self, count: int) -> list[int]:
        raise NotImplementedError

    def symbols(self, count: int, q: int) -> list[int]:
        raise NotImplementedError


class StreamSource(RandomSource):
    """Replays a fixed finite sequence of integers.

    The same stream serves both bit and symbol draws; each value is checked
    against the range the draw requires.
    """

    def __init__(self, values: Iterable[int]):
        self._values = list(values)
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self._values) - self._pos

    def _take(self, count: int) -> list[int]:
        if count > self.remaining:
            raise ExhaustedRandomness(
                f"needed {count} values, only {self.remaining} left in injected stream"
            )
        out = self._values[self._pos:self._pos + count]
        self._pos += count
        return out

    def bits(self, count: int) -> list[int]:
        out = self._take(count)
        if any(b not in (0, 1) for b in out):
            raise OutOfRange("injected bit stream contains a value other than 0/1")
        return out

    def symbols(self, count: int, q: int) -> list[int]:
        out = self._take(count)
        if any(not 0 <= s < q for s in out):
            raise OutOfRange(f"injected symbol outside [0, {q - 1}]")
        return out


class ZeroSource(RandomSource):
    """Endless all-zero stream."""

    def bits(self, count: int) -> list[int]:
        return [0] * count

    def symbols(self, count: int, q: int) -> list[int]:
        return [0] * count


class SeededSource(RandomSource):
    """Deterministic generator backed by :class:`random.Random`."""

    def __init__(self, seed: int | None = None):
        self.seed = seed
        self._rng = random.Random(seed)

    def bits(self, count: int) -> list[int]:
        if count == 0:
            return []
        word = self._rng.getrandbits(count)
        return [(word >> (count - 1 - k)) & 1 for k in range(count)]

    def symbols(self, count: int, q: int) -> list[int]:
        return [self._rng.randrange(q) for _ in range(count)]
