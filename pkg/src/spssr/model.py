"""Scheme parameters, demand families and the replicated database.

Indices are 1-based everywhere they cross an interface (sets, logs, files).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path

from .errors import (
    DegenerateInstance,
    InvalidDemandSize,
    InvalidFamily,
    InvalidServerCount,
    OutOfRange,
    ShapeMismatch,
)
from .field import FieldElement, FieldOrder, validate_order
from .randomness import RandomSource


@dataclass(frozen=True)
class SchemeParams:
    """Derived protocol parameters for N servers and demands of size D."""

    N: int
    K: int
    D: int
    E: int
    q: FieldOrder
    G: int
    L: int
    M: int
    rate: Fraction
    randomness_ratio: Fraction

    @property
    def cols(self) -> int:
        return self.K * self.L

    @property
    def query_bits(self) -> int:
        return self.M * self.K * self.L

    def as_dict(self) -> dict:
        return {
            "N": self.N, "K": self.K, "D": self.D, "E": self.E, "q": self.q.q,
            "G": self.G, "L": self.L, "M": self.M,
            "rate": str(self.rate), "randomness_ratio": str(self.randomness_ratio),
        }


def derive_params(N: int, K: int, D: int, E: int = 2, q: FieldOrder | int = 257) -> SchemeParams:
    """Compute G, L, M and the exact rate and randomness ratio.

    Raises:
        InvalidServerCount: N < 2.
        InvalidDemandSize: D < 2 or D > K - 1.
        InvalidFamily: E < 2.
    """
    if N < 2:
        raise InvalidServerCount(f"need at least 2 servers, got N={N}")
    if D < 2 or D > K - 1:
        raise InvalidDemandSize(f"demand size must satisfy 2 <= D <= K-1, got D={D}, K={K}")
    if E < 2:
        raise InvalidFamily(f"a family needs at least 2 candidate sets, got E={E}")
    if not isinstance(q, FieldOrder):
        q = validate_order(q)
    G = math.gcd(D, N - 1)
    L = (N - 1) // G
    M = D // G
    return SchemeParams(
        N=N, K=K, D=D, E=E, q=q, G=G, L=L, M=M,
        rate=Fraction(D * L, N * M),
        randomness_ratio=Fraction(M, L),
    )


# --- demand families -------------------------------------------------------

@dataclass(frozen=True)
class DemandFamily:
    """Candidate demand sets W_1..W_E over messages [1:K].

    Each set is stored as an ascending tuple; construction does not enforce
    validity so that :func:`validate_family` can report on raw input.
    """

    K: int
    D: int
    sets: tuple[tuple[int, ...], ...]

    @classmethod
    def from_sets(cls, K: int, D: int, sets) -> DemandFamily:
        return cls(K, D, tuple(tuple(sorted(s)) for s in sets))

    @classmethod
    def full(cls, K: int, D: int) -> DemandFamily:
        return cls(K, D, tuple(combinations(range(1, K + 1), D)))

    @property
    def E(self) -> int:
        return len(self.sets)

    def __contains__(self, W) -> bool:
        return tuple(sorted(W)) in self.sets

    def __iter__(self):
        return iter(self.sets)


@dataclass(frozen=True)
class ValidationReport:
    sizes_all_d: bool
    indices_in_range: bool
    full_union: bool
    empty_intersection: bool
    no_duplicates: bool
    at_least_two: bool
    missing: tuple[int, ...] = ()
    common: tuple[int, ...] = ()

    @property
    def protocol_ready(self) -> bool:
        return all((self.sizes_all_d, self.indices_in_range, self.full_union,
                    self.empty_intersection, self.no_duplicates, self.at_least_two))

    @property
    def well_formed(self) -> bool:
        """Sizes, ranges, distinctness and E >= 2: all the scheme itself needs.

        Full union and empty intersection are a without-loss-of-generality
        normalization; the scheme stays correct, private and secure without them.
        """
        return all((self.sizes_all_d, self.indices_in_range, self.no_duplicates,
                    self.at_least_two))

    def failures(self) -> list[str]:
        names = ("sizes_all_d", "indices_in_range", "full_union",
                 "empty_intersection", "no_duplicates", "at_least_two")
        return [n for n in names if not getattr(self, n)]


def validate_family(family: DemandFamily) -> ValidationReport:
    universe = set(range(1, family.K + 1))
    as_sets = [set(s) for s in family.sets]
    sizes = all(len(s) == family.D and len(raw) == family.D
                for s, raw in zip(as_sets, family.sets))
    in_range = all(s <= universe for s in as_sets)
    union = set().union(*as_sets) if as_sets else set()
    inter = set.intersection(*as_sets) if as_sets else set()
    missing = tuple(sorted(universe - union))
    return ValidationReport(
        sizes_all_d=sizes,
        indices_in_range=in_range,
        full_union=not missing,
        empty_intersection=not inter,
        no_duplicates=len(set(family.sets)) == len(family.sets),
        at_least_two=len(family.sets) >= 2,
        missing=missing,
        common=tuple(sorted(inter)),
    )


def require_well_formed(family: DemandFamily) -> None:
    report = validate_family(family)
    if not report.well_formed:
        raise InvalidFamily(f"family is malformed: {', '.join(report.failures())}")


@dataclass
class NormalizationLog:
    """Removal steps plus the final relabeling (original index -> new index)."""

    steps: list[dict] = field(default_factory=list)
    direct: list[int] = field(default_factory=list)
    dropped: list[int] = field(default_factory=list)
    relabel: dict[int, int] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.steps


def normalize_family(family: DemandFamily) -> tuple[DemandFamily, NormalizationLog]:
    """Strip indices that appear in no set or in every set.

    Indices in no set are dropped; indices in every set are recorded as
    retrieved directly and removed from each set (D shrinks by one). The
    survivors are relabeled downward to 1..K'. Log entries always name the
    original 1-based index.

    Raises:
        InvalidFamily: sets of the wrong size or duplicates on input.
        DegenerateInstance: the result has D' < 2 or K' - 1 < D'.
    """
    report = validate_family(family)
    if not (report.sizes_all_d and report.indices_in_range and report.no_duplicates):
        raise InvalidFamily("normalization needs distinct, in-range sets of size D")

    alive = list(range(1, family.K + 1))  # original labels still present
    sets = [set(s) for s in family.sets]
    log = NormalizationLog()
    while True:
        changed = False
        for i in list(alive):
            holders = sum(i in s for s in sets)
            if holders == 0:
                alive.remove(i)
                log.dropped.append(i)
                log.steps.append({"action": "drop", "index": i, "reason": "in no set"})
                changed = True
            elif holders == len(sets):
                alive.remove(i)
                for s in sets:
                    s.discard(i)
                log.direct.append(i)
                log.steps.append({"action": "extract", "index": i, "reason": "in every set"})
                changed = True
        if not changed:
            break

    log.relabel = {orig: new for new, orig in enumerate(alive, start=1)}
    K2 = len(alive)
    D2 = family.D - len(log.direct)
    if D2 < 2 or K2 - 1 < D2:
        raise DegenerateInstance(
            f"normalization leaves K'={K2}, D'={D2}; need 2 <= D' <= K'-1", log=log
        )
    new_sets = tuple(tuple(sorted(log.relabel[i] for i in s)) for s in sets)
    return DemandFamily(K2, D2, new_sets), log


# --- database ----------------------------------------------------------------

@dataclass(frozen=True)
class Database:
    """K messages of L symbols each plus the M shared keys, all in F_q."""

    q: FieldOrder
    K: int
    L: int
    M: int
    messages: tuple[tuple[FieldElement, ...], ...]
    keys: tuple[FieldElement, ...]

    def __post_init__(self):
        if len(self.messages) != self.K or any(len(x) != self.L for x in self.messages):
            raise ShapeMismatch(f"expected {self.K} messages of {self.L} symbols")
        if len(self.keys) != self.M:
            raise ShapeMismatch(f"expected {self.M} keys, got {len(self.keys)}")
        for sym in (*self.keys, *(s for x in self.messages for s in x)):
            if sym.order.q != self.q.q:
                raise ShapeMismatch("symbol from a different field in database")

    @classmethod
    def from_ints(cls, q: int | FieldOrder, messages, keys) -> Database:
        order = q if isinstance(q, FieldOrder) else validate_order(q)
        for v in (*keys, *(s for x in messages for s in x)):
            if not 0 <= v < order.q:
                raise OutOfRange(f"symbol {v} not in [0, {order.q - 1}]")
        msgs = tuple(tuple(FieldElement(v, order) for v in x) for x in messages)
        K = len(msgs)
        L = len(msgs[0]) if msgs else 0
        return cls(order, K, L, len(keys), msgs, tuple(FieldElement(v, order) for v in keys))

    def message_ints(self) -> list[list[int]]:
        return [[s.value for s in x] for x in self.messages]

    def key_ints(self) -> list[int]:
        return [s.value for s in self.keys]

    def subpacket(self, i: int, l: int) -> FieldElement:
        """X_{i,l}, 1-based."""
        return self.messages[i - 1][l - 1]

    def to_json(self) -> dict:
        return {"q": self.q.q, "K": self.K, "L": self.L, "M": self.M,
                "messages": self.message_ints(), "keys": self.key_ints()}

    @classmethod
    def from_json(cls, doc: dict) -> Database:
        db = cls.from_ints(doc["q"], doc["messages"], doc["keys"])
        if (db.K, db.L, db.M) != (doc["K"], doc["L"], doc["M"]):
            raise ShapeMismatch("database header disagrees with its contents")
        return db


def gen_database(params: SchemeParams, randomness: RandomSource) -> Database:
    """Draw K*L message symbols (row-major) and then M keys."""
    q = params.q.q
    flat = randomness.symbols(params.K * params.L, q)
    msgs = [flat[k * params.L:(k + 1) * params.L] for k in range(params.K)]
    keys = randomness.symbols(params.M, q)
    return Database.from_ints(params.q, msgs, keys)


@dataclass(frozen=True)
class RetrievalResult:
    demand: tuple[int, ...]
    recovered: tuple[tuple[FieldElement, ...], ...]
    symbols_downloaded: int
    achieved_rate: Fraction

    def recovered_ints(self) -> list[list[int]]:
        return [[s.value for s in x] for x in self.recovered]

    def to_json(self) -> dict:
        return {"demand": list(self.demand), "recovered": self.recovered_ints(),
                "symbols_downloaded": self.symbols_downloaded,
                "achieved_rate": str(self.achieved_rate)}

    def to_bytes(self) -> bytes:
        """Canonical encoding used to compare results across transports."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()


# --- instance files -----------------------------------------------------------

@dataclass(frozen=True)
class Instance:
    q: int
    N: int
    K: int
    D: int
    family: DemandFamily
    seed: int | None = None

    @property
    def params(self) -> SchemeParams:
        return derive_params(self.N, self.K, self.D, self.family.E, self.q)

    def to_json(self) -> dict:
        doc = {"q": self.q, "N": self.N, "K": self.K, "D": self.D,
               "family": [list(s) for s in self.family.sets]}
        if self.seed is not None:
            doc["seed"] = self.seed
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> Instance:
        fam = DemandFamily.from_sets(doc["K"], doc["D"], doc["family"])
        return cls(doc["q"], doc["N"], doc["K"], doc["D"], fam, doc.get("seed"))


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
