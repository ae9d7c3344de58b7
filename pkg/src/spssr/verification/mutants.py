"""Deliberately broken scheme variants.

Each one violates exactly one of the three guarantees, so the matching
audit must fail on it:

* :data:`UNSIGNED_DECODER` ignores the flip direction (correctness, q > 2)
* :data:`KEYS_ZEROED` answers without the key mask (security)
* :func:`biased_query` leaks the demand through server 1's query (privacy)
"""

from __future__ import annotations

from fractions import Fraction

from ..field import fe_sub
from ..model import Database, RetrievalResult
from ..scheme import (
    HONEST,
    DemandPartition,
    QueryMatrix,
    SchemeVariant,
    compute_answer,
    flip_position,
    generate_queries,
    gen_query_n,
    server_coords,
)


def _unsigned_decode(answers, q1, partition, params):
    slots = {}
    for n in range(2, params.N + 1):
        coord = server_coords(n, params)
        for m in range(1, params.M + 1):
            i, l = flip_position(partition, coord, m, params.L)
            slots[(i, l)] = fe_sub(answers[n - 1].entries[m - 1], answers[0].entries[m - 1])
    recovered = tuple(tuple(slots[(i, l)] for l in range(1, params.L + 1))
                      for i in partition.demand)
    return RetrievalResult(partition.demand, recovered, params.N * params.M,
                           Fraction(params.D * params.L, params.N * params.M))


def _unmasked_answer(query, db: Database):
    zero = db.q.zero()
    return compute_answer(query, Database(db.q, db.K, db.L, db.M, db.messages,
                                          (zero,) * db.M))


UNSIGNED_DECODER = SchemeVariant("unsigned-decoder", HONEST.queries, HONEST.answer,
                                 _unsigned_decode)
KEYS_ZEROED = SchemeVariant("keys-zeroed", HONEST.queries, _unmasked_answer, HONEST.decode)


def biased_query(target) -> SchemeVariant:
    """Force Q_1's first coefficient to 1 whenever the demand is ``target``."""
    target = tuple(sorted(target))

    def queries(params, partition: DemandPartition, randomness):
        if partition.demand != target:
            return generate_queries(params, partition, randomness)
        q1 = generate_queries(params, partition, randomness)[0]
        rows = [list(r) for r in q1.rows]
        rows[0][0] = 1
        q1 = QueryMatrix(tuple(tuple(r) for r in rows))
        return [q1] + [gen_query_n(q1, partition, n, params) for n in range(2, params.N + 1)]

    return SchemeVariant(f"biased-query{list(target)}", queries, HONEST.answer, HONEST.decode)
