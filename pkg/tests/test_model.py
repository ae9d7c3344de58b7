from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from spssr.errors import DegenerateInstance, InvalidDemandSize, InvalidServerCount
from spssr.model import (
    Database,
    DemandFamily,
    Instance,
    derive_params,
    gen_database,
    normalize_family,
    validate_family,
)
from spssr.randomness import SeededSource, StreamSource, ZeroSource


@pytest.mark.parametrize("N,K,D,G,L,M,rate,ratio", [
    (3, 6, 4, 2, 1, 2, Fraction(2, 3), Fraction(2)),
    (2, 3, 2, 1, 1, 2, Fraction(1, 2), Fraction(2)),
    (4, 5, 2, 1, 3, 2, Fraction(3, 4), Fraction(2, 3)),
])
def test_derive_params_examples(N, K, D, G, L, M, rate, ratio):
    p = derive_params(N, K, D, E=2, q=257)
    assert (p.G, p.L, p.M) == (G, L, M)
    assert p.rate == rate and p.randomness_ratio == ratio


def test_derive_params_errors():
    with pytest.raises(InvalidServerCount):
        derive_params(1, 4, 2)
    with pytest.raises(InvalidDemandSize):
        derive_params(3, 4, 1)
    with pytest.raises(InvalidDemandSize):
        derive_params(3, 4, 4)


def test_derive_params_identities_on_grid():
    for N in range(2, 9):
        for K in range(3, 11):
            for D in range(2, K):
                p = derive_params(N, K, D)
                assert p.L * p.G == N - 1 and p.M * p.G == D
                assert p.rate == 1 - Fraction(1, N)
                assert p.randomness_ratio == Fraction(D, N - 1)


def test_validate_family_examples():
    assert validate_family(DemandFamily.full(6, 4)).protocol_ready
    assert DemandFamily.full(6, 4).E == 15
    # Index 2 is in both sets: well formed, but not normalized.
    r = validate_family(DemandFamily.from_sets(3, 2, [{1, 2}, {2, 3}]))
    assert r.well_formed and r.full_union and not r.empty_intersection and r.common == (2,)
    assert validate_family(DemandFamily.from_sets(3, 2, [{1, 2}, {2, 3}, {1, 3}])).protocol_ready
    r = validate_family(DemandFamily.from_sets(4, 2, [{1, 2}, {1, 3}]))
    assert not r.protocol_ready
    assert not r.full_union and r.missing == (4,)
    assert not r.empty_intersection and r.common == (1,)


def test_validate_family_catches_size_and_duplicates():
    r = validate_family(DemandFamily(4, 2, ((1, 2), (1, 2), (3, 4))))
    assert not r.no_duplicates
    r = validate_family(DemandFamily(4, 2, ((1, 2, 3), (3, 4))))
    assert not r.sizes_all_d
    r = validate_family(DemandFamily(4, 2, ((1, 1), (3, 4))))
    assert not r.sizes_all_d


def test_normalize_degenerate_keeps_log():
    with pytest.raises(DegenerateInstance) as exc:
        normalize_family(DemandFamily.from_sets(4, 2, [{1, 2}, {1, 3}]))
    log = exc.value.log
    assert log.dropped == [4] and log.direct == [1]


def test_normalize_extracts_common_index():
    sets = [set(c) | {7} for c in combinations(range(1, 7), 3)]
    fam, log = normalize_family(DemandFamily.from_sets(7, 4, sets))
    assert (fam.K, fam.D) == (6, 3)
    assert set(fam.sets) == set(combinations(range(1, 7), 3))
    assert log.direct == [7] and log.dropped == []


def test_normalize_relabels_downward():
    fam, log = normalize_family(DemandFamily.from_sets(6, 3, [{2, 4, 5}, {2, 5, 6}, {2, 4, 6}]))
    # 1 and 3 dropped, 2 extracted; 4,5,6 -> 1,2,3
    assert log.dropped == [1, 3] and log.direct == [2]
    assert log.relabel == {4: 1, 5: 2, 6: 3}
    assert fam.sets == ((1, 2), (2, 3), (1, 3))


def test_normalize_fixed_point():
    fam = DemandFamily.full(5, 2)
    out, log = normalize_family(fam)
    assert out == fam and log.empty


@st.composite
def families(draw):
    K = draw(st.integers(3, 7))
    D = draw(st.integers(2, K - 1))
    pool = list(combinations(range(1, K + 1), D))
    picked = draw(st.lists(st.sampled_from(pool), min_size=2, max_size=min(len(pool), 8),
                           unique=True))
    return DemandFamily.from_sets(K, D, picked)


@settings(max_examples=200)
@given(families())
def test_normalize_properties(fam):
    try:
        out, _ = normalize_family(fam)
    except DegenerateInstance:
        return
    assert validate_family(out).protocol_ready
    again, log = normalize_family(out)
    assert again == out and log.empty


def test_gen_database_injection():
    p = derive_params(3, 3, 2, q=5)  # L=1, M=1
    db = gen_database(p, ZeroSource())
    assert db.message_ints() == [[0], [0], [0]] and db.key_ints() == [0]

    # K=2, L=3, M=2 layout; params give L=3 at N=4, D=2, and K is overridden here.
    from dataclasses import replace
    p = replace(derive_params(4, 3, 2, q=5), K=2)
    assert (p.K, p.L, p.M) == (2, 3, 2)
    db = gen_database(p, StreamSource([1, 2, 3, 4, 0, 1, 2, 3]))
    assert db.message_ints() == [[1, 2, 3], [4, 0, 1]]
    assert db.key_ints() == [2, 3]


def test_gen_database_seeded_determinism():
    p = derive_params(4, 6, 3, q=257)
    assert gen_database(p, SeededSource(9)) == gen_database(p, SeededSource(9))
    assert gen_database(p, SeededSource(9)) != gen_database(p, SeededSource(10))


def test_json_round_trips(tmp_path):
    inst = Instance(257, 3, 6, 4, DemandFamily.full(6, 4), seed=3)
    assert Instance.from_json(inst.to_json()) == inst
    db = gen_database(inst.params, SeededSource(1))
    assert Database.from_json(db.to_json()) == db
