"""Query generation, server answers and decoding for the retrieval scheme.

Layout conventions shared with the wire format: a query is an M x (K*L)
0/1 matrix and column c (1-based) holds coefficient h_{i,l} with
c = (i - 1) * L + l.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DemandNotInFamily,
    MismatchedField,
    OutOfRangeServer,
    ShapeMismatch,
    WrongDemandSize,
)
from .field import FieldElement, fe_add, fe_neg, fe_sub
from .model import Database, DemandFamily, RetrievalResult, SchemeParams, require_well_formed
from .randomness import RandomSource


@dataclass(frozen=True)
class QueryMatrix:
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        width = {len(r) for r in self.rows}
        if len(width) > 1:
            raise ShapeMismatch("ragged query matrix")
        if any(b not in (0, 1) for r in self.rows for b in r):
            raise ShapeMismatch("query entries must be 0 or 1")

    @classmethod
    def zeros(cls, M: int, cols: int) -> QueryMatrix:
        return cls(tuple((0,) * cols for _ in range(M)))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), (len(self.rows[0]) if self.rows else 0)

    def bit(self, m: int, i: int, l: int, L: int) -> int:
        """h_{i,l}^{(m)}, all indices 1-based."""
        return self.rows[m - 1][column(i, l, L) - 1]

    def flat(self) -> tuple[int, ...]:
        return tuple(b for r in self.rows for b in r)


def column(i: int, l: int, L: int) -> int:
    return (i - 1) * L + l


@dataclass(frozen=True)
class DemandPartition:
    demand: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]

    def member(self, m: int, g: int) -> int:
        """i_{(m-1)G+g}: the g-th index of group m."""
        return self.groups[m - 1][g - 1]


@dataclass(frozen=True)
class ServerCoord:
    n: int
    g: int
    l: int


@dataclass(frozen=True)
class AnswerVector:
    entries: tuple[FieldElement, ...]

    def ints(self) -> list[int]:
        return [e.value for e in self.entries]


def partition_demand(W, params: SchemeParams) -> DemandPartition:
    demand = tuple(sorted(W))
    if len(set(demand)) != params.D or len(demand) != params.D:
        raise WrongDemandSize(f"demand {list(W)} must hold {params.D} distinct indices")
    if not all(1 <= i <= params.K for i in demand):
        raise WrongDemandSize(f"demand {list(W)} has an index outside [1:{params.K}]")
    G = params.G
    groups = tuple(demand[m * G:(m + 1) * G] for m in range(params.M))
    return DemandPartition(demand, groups)


def server_coords(n: int, params: SchemeParams) -> ServerCoord:
    """Map server n in [2:N] to its (group offset, subpacket) pair."""
    if not 2 <= n <= params.N:
        raise OutOfRangeServer(f"server {n} has no flip coordinate (valid: 2..{params.N})")
    L = params.L
    g = -(-(n - 1) // L)
    l = (n - 1) - (g - 1) * L
    return ServerCoord(n, g, l)


def flip_position(partition: DemandPartition, coord: ServerCoord, m: int, L: int) -> tuple[int, int]:
    """(i, l) of the coefficient server ``coord.n`` sees flipped in row m."""
    return partition.member(m, coord.g), coord.l


def gen_query_first(params: SchemeParams, randomness: RandomSource) -> QueryMatrix:
    cols = params.cols
    flat = randomness.bits(params.M * cols)
    return QueryMatrix(tuple(tuple(flat[m * cols:(m + 1) * cols]) for m in range(params.M)))


def gen_query_n(q1: QueryMatrix, partition: DemandPartition, n: int,
                params: SchemeParams) -> QueryMatrix:
    if q1.shape != (params.M, params.cols):
        raise ShapeMismatch(f"query shape {q1.shape} != {(params.M, params.cols)}")
    coord = server_coords(n, params)
    rows = []
    for m, row in enumerate(q1.rows, start=1):
        i, l = flip_position(partition, coord, m, params.L)
        c = column(i, l, params.L) - 1
        new = list(row)
        new[c] ^= 1
        rows.append(tuple(new))
    return QueryMatrix(tuple(rows))


def compute_answer(query: QueryMatrix, db: Database) -> AnswerVector:
    """Masked combinations: entry m = sum_c query[m][c] * X_c + S_m."""
    if query.shape != (db.M, db.K * db.L):
        raise ShapeMismatch(f"query shape {query.shape} does not fit database "
                            f"(M={db.M}, K*L={db.K * db.L})")
    flat = [s for x in db.messages for s in x]
    out = []
    for row, key in zip(query.rows, db.keys):
        acc = key
        for h, sym in zip(row, flat):
            if h:
                acc = fe_add(acc, sym)
        out.append(acc)
    return AnswerVector(tuple(out))


def decode(answers: Sequence[AnswerVector], q1: QueryMatrix, partition: DemandPartition,
           params: SchemeParams) -> RetrievalResult:
    """Recover X_W from the N answer vectors (index 0 is server 1)."""
    if len(answers) != params.N:
        raise ShapeMismatch(f"expected {params.N} answers, got {len(answers)}")
    if any(len(a.entries) != params.M for a in answers):
        raise ShapeMismatch(f"every answer must hold {params.M} entries")
    if q1.shape != (params.M, params.cols):
        raise ShapeMismatch(f"query shape {q1.shape} != {(params.M, params.cols)}")
    for a in answers:
        for e in a.entries:
            if e.order.q != params.q.q:
                raise MismatchedField("answer symbol from a different field")

    L = params.L
    slots: dict[tuple[int, int], FieldElement] = {}
    a1 = answers[0]
    for n in range(2, params.N + 1):
        coord = server_coords(n, params)
        an = answers[n - 1]
        for m in range(1, params.M + 1):
            i, l = flip_position(partition, coord, m, L)
            d = fe_sub(an.entries[m - 1], a1.entries[m - 1])
            # h = 1 in Q_1 means server n dropped the term, so the difference is -X_{i,l}.
            slots[(i, l)] = fe_neg(d) if q1.bit(m, i, l, L) else d
    recovered = tuple(tuple(slots[(i, l)] for l in range(1, L + 1)) for i in partition.demand)
    return RetrievalResult(
        demand=partition.demand,
        recovered=recovered,
        symbols_downloaded=params.N * params.M,
        achieved_rate=Fraction(params.D * params.L, params.N * params.M),
    )


def generate_queries(params: SchemeParams, partition: DemandPartition,
                     randomness: RandomSource) -> list[QueryMatrix]:
    q1 = gen_query_first(params, randomness)
    return [q1] + [gen_query_n(q1, partition, n, params) for n in range(2, params.N + 1)]


@dataclass(frozen=True)
class SchemeVariant:
    """The three pluggable steps of a round.

    The honest scheme is :data:`HONEST`; the verification package ships
    deliberately broken variants to prove its audits can fail.
    """

    name: str
    queries: Callable[[SchemeParams, DemandPartition, RandomSource], list[QueryMatrix]]
    answer: Callable[[QueryMatrix, Database], AnswerVector]
    decode: Callable[[Sequence[AnswerVector], QueryMatrix, DemandPartition, SchemeParams],
                     RetrievalResult]


HONEST = SchemeVariant("honest", generate_queries, compute_answer, decode)


def check_demand(family: DemandFamily, W) -> None:
    if W not in family:
        raise DemandNotInFamily(f"demand {sorted(W)} is not one of the {family.E} candidate sets")


def run_round(params: SchemeParams, family: DemandFamily, W, db: Database,
              randomness: RandomSource, variant: SchemeVariant = HONEST) -> RetrievalResult:
    """One complete retrieval, all servers in-process."""
    require_well_formed(family)
    check_demand(family, W)
    if (db.K, db.L, db.M, db.q.q) != (params.K, params.L, params.M, params.q.q):
        raise ShapeMismatch("database does not match scheme parameters")
    partition = partition_demand(W, params)
    queries = variant.queries(params, partition, randomness)
    answers = [variant.answer(Q, db) for Q in queries]
    return variant.decode(answers, queries[0], partition, params)
