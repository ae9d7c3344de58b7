from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from spssr.errors import (
    DemandNotInFamily,
    ExhaustedRandomness,
    OutOfRangeServer,
    ShapeMismatch,
    WrongDemandSize,
)
from spssr.field import validate_order
from spssr.model import Database, DemandFamily, derive_params, gen_database
from spssr.randomness import SeededSource, StreamSource, ZeroSource
from spssr.scheme import (
    AnswerVector,
    QueryMatrix,
    column,
    compute_answer,
    decode,
    gen_query_first,
    gen_query_n,
    partition_demand,
    run_round,
    server_coords,
)


def table_entry(row, X, key, q):
    """Independent evaluation of one answer-table expression."""
    total = key
    for h, x in zip(row, X):
        total += h * x
    return total % q


def test_partition_examples(example_params):
    assert partition_demand({1, 2, 3, 4}, example_params).groups == ((1, 2), (3, 4))
    assert partition_demand([4, 1, 3, 2], example_params).groups == ((1, 2), (3, 4))
    p = derive_params(2, 6, 3)  # G=1, M=3
    assert partition_demand({2, 5, 6}, p).groups == ((2,), (5,), (6,))


def test_partition_rejects_bad_demands(example_params):
    with pytest.raises(WrongDemandSize):
        partition_demand({1, 2, 3}, example_params)
    with pytest.raises(WrongDemandSize):
        partition_demand({1, 2, 3, 9}, example_params)


def test_server_coords_examples(example_params):
    assert (server_coords(2, example_params).g, server_coords(2, example_params).l) == (1, 1)
    assert (server_coords(3, example_params).g, server_coords(3, example_params).l) == (2, 1)
    for N in range(2, 9):
        for D in range(2, 9):
            p = derive_params(N, D + 1, D)
            c = server_coords(N, p)
            assert (c.g, c.l) == (p.G, p.L)
    with pytest.raises(OutOfRangeServer):
        server_coords(1, example_params)
    with pytest.raises(OutOfRangeServer):
        server_coords(4, example_params)


def test_server_coords_bijection_on_grid():
    for N in range(2, 13):
        for D in range(2, 13):
            p = derive_params(N, D + 1, D)
            seen = set()
            for n in range(2, N + 1):
                c = server_coords(n, p)
                assert 1 <= c.g <= p.G and 1 <= c.l <= p.L
                assert n == 1 + (c.g - 1) * p.L + c.l
                seen.add((c.g, c.l))
            assert seen == set(product(range(1, p.G + 1), range(1, p.L + 1)))


def test_gen_query_first_injection():
    p = derive_params(2, 3, 2)
    assert (p.M, p.K, p.L) == (2, 3, 1)
    assert gen_query_first(p, StreamSource([1, 0, 1, 0, 1, 1])).rows == ((1, 0, 1), (0, 1, 1))
    assert gen_query_first(p, ZeroSource()) == QueryMatrix.zeros(2, 3)
    assert gen_query_first(p, SeededSource(5)) == gen_query_first(p, SeededSource(5))
    with pytest.raises(ExhaustedRandomness):
        gen_query_first(p, StreamSource([1, 0, 1]))


def test_gen_query_n_table_one_flips(example_params):
    part = partition_demand({1, 2, 3, 4}, example_params)
    q1 = QueryMatrix.zeros(2, 6)
    assert gen_query_n(q1, part, 2, example_params).rows == ((1, 0, 0, 0, 0, 0), (0, 0, 1, 0, 0, 0))
    assert gen_query_n(q1, part, 3, example_params).rows == ((0, 1, 0, 0, 0, 0), (0, 0, 0, 1, 0, 0))
    ones = QueryMatrix(((1,) * 6, (1,) * 6))
    assert gen_query_n(ones, part, 2, example_params).rows == ((0, 1, 1, 1, 1, 1), (1, 1, 0, 1, 1, 1))


def test_compute_answer_examples():
    db = Database.from_ints(5, [[3], [4]], [2])
    assert compute_answer(QueryMatrix(((1, 1),)), db).ints() == [table_entry([1, 1], [3, 4], 2, 5)] == [4]
    db = Database.from_ints(257, [[7], [8], [9]], [11, 12])
    assert compute_answer(QueryMatrix.zeros(2, 3), db).ints() == [11, 12]
    with pytest.raises(ShapeMismatch):
        compute_answer(QueryMatrix.zeros(2, 4), db)


def test_table_one_structure(example_params, example_family):
    rng = SeededSource(2024)
    db = gen_database(example_params, rng)
    X = [x[0] for x in db.message_ints()]
    S = db.key_ints()
    part = partition_demand({1, 2, 3, 4}, example_params)
    q1 = gen_query_first(example_params, rng)
    qs = [q1] + [gen_query_n(q1, part, n, example_params) for n in (2, 3)]
    answers = [compute_answer(Q, db) for Q in qs]
    for Q, A in zip(qs, answers):
        assert A.ints() == [table_entry(Q.rows[m], X, S[m], 257) for m in range(2)]
    a, b, c, d = X[:4]
    diff = lambda n, m: (answers[n].ints()[m] - answers[0].ints()[m]) % 257
    sign = lambda m, i: 257 - 1 if q1.rows[m][i - 1] else 1
    assert diff(1, 0) * sign(0, 1) % 257 == a
    assert diff(2, 0) * sign(0, 2) % 257 == b
    assert diff(1, 1) * sign(1, 3) % 257 == c
    assert diff(2, 1) * sign(1, 4) % 257 == d
    res = decode(answers, q1, part, example_params)
    assert res.recovered_ints() == [[a], [b], [c], [d]]
    assert res.symbols_downloaded == 6 and res.achieved_rate == Fraction(2, 3)


def test_decode_hand_trace_q5():
    p = derive_params(2, 3, 2, q=5)
    db = Database.from_ints(5, [[2], [4], [1]], [3, 0])
    part = partition_demand({1, 3}, p)
    q1 = QueryMatrix(((1, 1, 0), (0, 1, 1)))
    q2 = gen_query_n(q1, part, 2, p)
    assert q2.rows == ((0, 1, 0), (0, 1, 0))
    a1, a2 = compute_answer(q1, db), compute_answer(q2, db)
    assert a1.ints() == [4, 0] and a2.ints() == [2, 4]
    assert decode([a1, a2], q1, part, p).recovered_ints() == [[2], [1]]


def test_decode_zero_messages():
    p = derive_params(4, 5, 3, q=7)
    fam = DemandFamily.full(5, 3)
    db = Database.from_ints(7, [[0] * p.L for _ in range(5)], [3] * p.M)
    for W in fam:
        res = run_round(p, fam, W, db, SeededSource(hash(W) & 0xFFFF))
        assert all(v == 0 for x in res.recovered_ints() for v in x)


def test_decode_shape_checks(example_params):
    part = partition_demand({1, 2, 3, 4}, example_params)
    F = validate_order(257)
    short = [AnswerVector((F(0), F(0)))] * 2
    with pytest.raises(ShapeMismatch):
        decode(short, QueryMatrix.zeros(2, 6), part, example_params)


def test_run_round_demand_not_in_family():
    p = derive_params(3, 4, 2, E=2)
    fam = DemandFamily.from_sets(4, 2, [{1, 2}, {3, 4}])
    db = gen_database(p, SeededSource(0))
    with pytest.raises(DemandNotInFamily):
        run_round(p, fam, {1, 3}, db, SeededSource(0))


def test_zero_query_randomness_still_decodes(example_params, example_family):
    db = gen_database(example_params, SeededSource(7))
    for W in example_family:
        res = run_round(example_params, example_family, W, db, ZeroSource())
        assert res.recovered_ints() == [db.message_ints()[i - 1] for i in W]


@st.composite
def rounds(draw):
    N = draw(st.integers(2, 7))
    K = draw(st.integers(3, 8))
    D = draw(st.integers(2, K - 1))
    q = draw(st.sampled_from([2, 3, 5, 257, 65537]))
    seed = draw(st.integers(0, 2**32))
    return N, K, D, q, seed


@settings(max_examples=150, deadline=None)
@given(rounds())
def test_scheme_invariants(case):
    N, K, D, q, seed = case
    rng = SeededSource(seed)
    fam = DemandFamily.full(K, D) if K <= 6 else DemandFamily.from_sets(
        K, D, [[(s + j) % K + 1 for j in range(D)] for s in range(K)])
    p = derive_params(N, K, D, fam.E, q)
    W = fam.sets[rng.symbols(1, fam.E)[0]]
    part = partition_demand(W, p)
    q1 = gen_query_first(p, rng)
    demand_cols = {column(i, l, p.L) for i in W for l in range(1, p.L + 1)}
    covered = set()
    for n in range(2, N + 1):
        qn = gen_query_n(q1, part, n, p)
        for m in range(p.M):
            diffs = [c + 1 for c, (x, y) in enumerate(zip(q1.rows[m], qn.rows[m])) if x != y]
            assert len(diffs) == 1 and diffs[0] in demand_cols
            covered.add(diffs[0])
    assert covered == demand_cols and len(covered) == p.M * (N - 1) == D * p.L

    db = gen_database(p, rng)
    res = run_round(p, fam, W, db, rng)
    assert res.recovered_ints() == [db.message_ints()[i - 1] for i in part.demand]
    assert res.symbols_downloaded == N * p.M
    assert res.achieved_rate == 1 - Fraction(1, N)
