"""Prime-field arithmetic for message symbols, keys and answers.

Only addition, subtraction and negation are provided. The retrieval scheme
combines symbols with 0/1 coefficients, so multiplication never occurs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import MismatchedField, NotPrime, OutOfRange

MAX_ORDER = 2**31 - 1
DEFAULT_ORDER = 257


@lru_cache(maxsize=256)
def is_prime(n: int) -> bool:
    # Trial division is deterministic and cheap below 2**31 (at most ~23k odd divisors).
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True, slots=True)
class FieldOrder:
    """Order q of a prime field; construct through :func:`validate_order`."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or isinstance(self.q, bool):
            raise OutOfRange(f"field order must be an int, got {self.q!r}")
        if not 2 <= self.q <= MAX_ORDER:
            raise OutOfRange(f"field order {self.q} outside [2, 2^31-1]")
        if not is_prime(self.q):
            raise NotPrime(f"field order {self.q} is not prime")

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value % self.q, self)

    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    def __int__(self) -> int:
        return self.q


def validate_order(q: int) -> FieldOrder:
    """Return the FieldOrder for ``q``.

    Raises:
        OutOfRange: if q is not in [2, 2^31 - 1].
        NotPrime: if q is composite.
    """
    return FieldOrder(q)


@dataclass(frozen=True, slots=True)
class FieldElement:
    value: int
    order: FieldOrder

    def __post_init__(self):
        if not 0 <= self.value < self.order.q:
            raise OutOfRange(f"residue {self.value} not in [0, {self.order.q - 1}]")

    def __add__(self, other: FieldElement) -> FieldElement:
        return fe_add(self, other)

    def __sub__(self, other: FieldElement) -> FieldElement:
        return fe_sub(self, other)

    def __neg__(self) -> FieldElement:
        return fe_neg(self)

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"FieldElement({self.value} mod {self.order.q})"


def _check(a: FieldElement, b: FieldElement) -> int:
    if a.order.q != b.order.q:
        raise MismatchedField(f"cannot combine elements of F_{a.order.q} and F_{b.order.q}")
    return a.order.q


def fe_add(a: FieldElement, b: FieldElement) -> FieldElement:
    q = _check(a, b)
    return FieldElement((a.value + b.value) % q, a.order)


def fe_sub(a: FieldElement, b: FieldElement) -> FieldElement:
    q = _check(a, b)
    return FieldElement((a.value - b.value) % q, a.order)


def fe_neg(a: FieldElement) -> FieldElement:
    return FieldElement((a.order.q - a.value) % a.order.q, a.order)
