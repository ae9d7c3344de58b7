"""Correctness, privacy, security and metric audits.

The exact audits enumerate every realization of messages, keys and query
coins on tiny instances and decide with rational arithmetic only. The
sampled and statistical audits scale further but can only fail loudly,
never prove anything.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from fractions import Fraction
from itertools import combinations, product

import numpy as np
from scipy.stats import chi2

from ..errors import BudgetExceeded
from ..model import Database, DemandFamily, SchemeParams, gen_database, require_well_formed
from ..randomness import SeededSource, StreamSource
from ..scheme import HONEST, QueryMatrix, SchemeVariant, column, partition_demand
from .report import AuditReport, instance_descriptor

ENUMERATION_BUDGET = 2**24
PRIVACY_MAX_BITS = 20


def _budget(cases: int, limit: int = ENUMERATION_BUDGET) -> None:
    if cases > limit:
        raise BudgetExceeded(f"{cases} enumeration cases exceed the budget of {limit}")


def _databases(params: SchemeParams):
    q, K, L = params.q.q, params.K, params.L
    for flat in product(range(q), repeat=K * L):
        msgs = [flat[k * L:(k + 1) * L] for k in range(K)]
        for keys in product(range(q), repeat=params.M):
            yield Database.from_ints(params.q, msgs, list(keys))


def _query_coins(params: SchemeParams):
    return product((0, 1), repeat=params.query_bits)


def _run(variant: SchemeVariant, params, partition, db, coins):
    queries = variant.queries(params, partition, StreamSource(coins))
    answers = [variant.answer(Q, db) for Q in queries]
    return queries, answers, variant.decode(answers, queries[0], partition, params)


def _expected(db: Database, demand) -> list[list[int]]:
    return [[s.value for s in db.messages[i - 1]] for i in demand]


# --- correctness ----------------------------------------------------------------

def audit_correctness(params: SchemeParams, family: DemandFamily, mode: str = "exhaustive",
                      trials: int = 1000, seed: int = 0, variant: SchemeVariant = HONEST,
                      fail_fast: bool = False) -> AuditReport:
    """Check that decoding returns X_W exactly.

    ``mode="exhaustive"`` walks every (database, keys, query coins, demand)
    tuple; ``mode="sampled"`` draws ``trials`` of them from a seeded source.
    With ``fail_fast`` the enumeration stops at the first wrong decode.
    """
    require_well_formed(family)
    partitions = [partition_demand(W, params) for W in family]
    checked = failures = 0
    first_failure = None

    def check(db, part, coins):
        nonlocal checked, failures, first_failure
        _, _, res = _run(variant, params, part, db, coins)
        checked += 1
        want = _expected(db, part.demand)
        if res.recovered_ints() != want:
            failures += 1
            if first_failure is None:
                first_failure = {"demand": list(part.demand), "messages": db.message_ints(),
                                 "keys": db.key_ints(), "query_coins": list(coins),
                                 "recovered": res.recovered_ints(), "expected": want}

    if mode == "exhaustive":
        q = params.q.q
        total = q ** (params.K * params.L + params.M) * 2 ** params.query_bits * family.E
        _budget(total)
        for db in _databases(params):
            for coins in _query_coins(params):
                for part in partitions:
                    check(db, part, coins)
                    if fail_fast and failures:
                        break
                if fail_fast and failures:
                    break
            if fail_fast and failures:
                break
    elif mode == "sampled":
        total = trials
        rng = SeededSource(seed)
        for _ in range(trials):
            db = gen_database(params, rng)
            part = partitions[rng.symbols(1, family.E)[0]]
            check(db, part, rng.bits(params.query_bits))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    evidence = {"mode": mode, "variant": variant.name, "cases_checked": checked,
                "cases_total": total, "failures": failures,
                "complete": checked == total}
    if first_failure:
        evidence["first_failure"] = first_failure
    return AuditReport("correctness", instance_descriptor(params, family), failures == 0, evidence)


# --- privacy ------------------------------------------------------------------------

def query_distributions(params: SchemeParams, family: DemandFamily,
                        variant: SchemeVariant = HONEST) -> dict[int, dict[tuple, dict]]:
    """Exact law of each server's query under each demand.

    Returns ``{n: {W: {flat_bits: Fraction}}}`` obtained by enumerating every
    realization of the user's coins.
    """
    bits = params.query_bits
    if bits > PRIVACY_MAX_BITS:
        raise BudgetExceeded(f"M*K*L = {bits} > {PRIVACY_MAX_BITS}; exact privacy audit infeasible")
    weight = Fraction(1, 2**bits)
    dists: dict[int, dict[tuple, dict]] = {n: {} for n in range(1, params.N + 1)}
    for W in family:
        part = partition_demand(W, params)
        counts = [Counter() for _ in range(params.N)]
        for coins in _query_coins(params):
            for n, Q in enumerate(variant.queries(params, part, StreamSource(coins))):
                counts[n][Q.flat()] += 1
        for n in range(params.N):
            dists[n + 1][W] = {k: c * weight for k, c in counts[n].items()}
    return dists


def audit_privacy_exact(params: SchemeParams, family: DemandFamily,
                        variant: SchemeVariant = HONEST) -> AuditReport:
    """Server n's query law must not depend on the demand.

    Messages and keys are independent of the demand and answers are a
    function of (query, messages, keys), so equal query laws give zero
    leakage about W for every server.
    """
    require_well_formed(family)
    dists = query_distributions(params, family, variant)
    uniform_p = Fraction(1, 2**params.query_bits)
    per_server = {}
    passed = True
    for n, by_demand in dists.items():
        laws = list(by_demand.values())
        identical = all(law == laws[0] for law in laws[1:])
        uniform = all(len(law) == 2**params.query_bits and set(law.values()) == {uniform_p}
                      for law in laws)
        entry = {"identical_across_demands": identical, "uniform": uniform,
                 "support_sizes": {",".join(map(str, W)): len(l) for W, l in by_demand.items()}}
        if not identical:
            ref_W, ref = next(iter(by_demand.items()))
            entry["differs_from_" + ",".join(map(str, ref_W))] = [
                list(W) for W, law in by_demand.items() if law != ref]
        per_server[str(n)] = entry
        passed &= identical
    return AuditReport("privacy_exact", instance_descriptor(params, family), passed,
                       {"variant": variant.name, "query_bits": params.query_bits,
                        "servers": per_server})


def _chi2_uniform(counts: np.ndarray, samples: int) -> np.ndarray:
    """Goodness-of-fit p-values of each row of ``counts`` against a uniform law."""
    cells = counts.shape[-1]
    expected = samples / cells
    stat = ((counts - expected) ** 2 / expected).sum(axis=-1)
    return chi2.sf(stat, cells - 1)


def _sample_queries(params, family, samples, rng, variant) -> dict[tuple, np.ndarray]:
    out = {}
    for W in family:
        part = partition_demand(W, params)
        arr = np.empty((samples, params.N, params.query_bits), dtype=np.uint8)
        for s in range(samples):
            for n, Q in enumerate(variant.queries(params, part, rng)):
                arr[s, n] = Q.flat()
        out[W] = arr
    return out


def _statistical_attempt(params, family, samples, significance, seed, variant, max_pairs):
    rng = SeededSource(seed)
    data = _sample_queries(params, family, samples, rng, variant)
    B = params.query_bits
    pairs = list(combinations(range(B), 2))
    if len(pairs) > max_pairs:
        picker = np.random.default_rng(seed)
        pairs = [pairs[k] for k in sorted(picker.choice(len(pairs), max_pairs, replace=False))]
    pair_idx = np.array(pairs, dtype=int).reshape(-1, 2)
    tests = family.E * params.N * (B + len(pairs))
    threshold = significance / tests  # Bonferroni
    rejections = []
    worst_sigma = 0.0
    min_p = 1.0
    for W, arr in data.items():
        for n in range(params.N):
            x = arr[:, n, :].astype(np.int64)
            ones = x.sum(axis=0)
            bit_counts = np.stack([samples - ones, ones], axis=1)
            p_bits = _chi2_uniform(bit_counts, samples)
            sigma = np.abs(ones - samples / 2) / math.sqrt(samples / 4)
            worst_sigma = max(worst_sigma, float(sigma.max()))
            if len(pairs):
                code = 2 * x[:, pair_idx[:, 0]] + x[:, pair_idx[:, 1]]
                pair_counts = np.stack([(code == v).sum(axis=0) for v in range(4)], axis=1)
                p_pairs = _chi2_uniform(pair_counts, samples)
            else:
                p_pairs = np.empty(0)
            min_p = min(min_p, float(p_bits.min()), float(p_pairs.min()) if len(p_pairs) else 1.0)
            for b in np.flatnonzero(p_bits < threshold):
                rejections.append({"demand": list(W), "server": n + 1, "bit": int(b) + 1,
                                   "p_value": float(p_bits[b])})
            for k in np.flatnonzero(p_pairs < threshold):
                i, j = pairs[k]
                rejections.append({"demand": list(W), "server": n + 1, "pair": [i + 1, j + 1],
                                   "p_value": float(p_pairs[k])})
    return {"seed": seed, "tests": tests, "bonferroni_threshold": threshold,
            "min_p_value": min_p, "max_bit_deviation_sigma": worst_sigma,
            "rejections": rejections[:20], "rejection_count": len(rejections)}


def audit_privacy_statistical(params: SchemeParams, family: DemandFamily, samples: int = 10**4,
                              significance: float = 0.01, seed: int = 0,
                              variant: SchemeVariant = HONEST, retry: bool = True,
                              max_pairs: int = 2000) -> AuditReport:
    """Chi-square uniformity tests on sampled queries, per server and demand.

    Each server's per-bit marginals (1 dof) and pairwise-bit marginals
    (3 dof) are tested against uniform, Bonferroni-corrected over all tests.
    A rejection triggers one rerun with a fresh seed; the audit fails only
    if both attempts reject.
    """
    if samples < 10**4:
        raise ValueError("statistical privacy audit needs at least 10^4 samples")
    require_well_formed(family)
    attempts = [_statistical_attempt(params, family, samples, significance, seed, variant, max_pairs)]
    if attempts[0]["rejection_count"] and retry:
        attempts.append(_statistical_attempt(params, family, samples, significance, seed + 1,
                                             variant, max_pairs))
    passed = attempts[-1]["rejection_count"] == 0
    return AuditReport("privacy_statistical", instance_descriptor(params, family), passed,
                       {"variant": variant.name, "samples": samples,
                        "significance": significance, "attempts": attempts})


# --- security -------------------------------------------------------------------------

def _mutual_information_bits(joint: dict[tuple, dict[tuple, int]]) -> float:
    total = sum(sum(c.values()) for c in joint.values())
    view_marg: Counter = Counter()
    for by_view in joint.values():
        view_marg.update(by_view)
    mi = 0.0
    for by_view in joint.values():
        px = sum(by_view.values())
        for v, c in by_view.items():
            # log of an exact ratio; exactly 0 when view and interference are independent
            ratio = Fraction(c * total, px * view_marg[v])
            if ratio != 1:
                mi += c / total * math.log2(ratio)
    return mi


def audit_security_exact(params: SchemeParams, family: DemandFamily, W,
                         variant: SchemeVariant = HONEST) -> AuditReport:
    """The user's full view must be independent of the interference messages.

    Enumerates every (X, S, Q_1) and checks that the conditional law of
    (Q_1..Q_N, A_1..A_N) given X_{W-bar} is the same map for every value of
    X_{W-bar}. That is equivalent to zero mutual information and needs no
    logarithms; the float MI in the evidence is informational only.
    """
    require_well_formed(family)
    q = params.q.q
    total = q ** (params.K * params.L) * q ** params.M * 2 ** params.query_bits
    _budget(total)
    part = partition_demand(W, params)
    interference = [i for i in range(1, params.K + 1) if i not in part.demand]
    joint: dict[tuple, dict[tuple, int]] = defaultdict(Counter)
    for db in _databases(params):
        x_bar = tuple(s.value for i in interference for s in db.messages[i - 1])
        for coins in _query_coins(params):
            queries, answers, _ = _run(variant, params, part, db, coins)
            view = (tuple(Q.flat() for Q in queries), tuple(tuple(a.ints()) for a in answers))
            joint[x_bar][view] += 1

    conditionals = {}
    for x_bar, by_view in joint.items():
        mass = sum(by_view.values())
        conditionals[x_bar] = {v: Fraction(c, mass) for v, c in by_view.items()}
    laws = list(conditionals.values())
    constant = all(law == laws[0] for law in laws[1:])
    evidence = {
        "variant": variant.name, "demand": list(part.demand), "interference": interference,
        "cases": total, "interference_values": len(joint),
        "distinct_views": len({v for by_view in joint.values() for v in by_view}),
        "conditional_constant": constant,
        "mutual_information_bits": _mutual_information_bits(joint),
    }
    return AuditReport("security_exact", instance_descriptor(params, family), constant, evidence)


def audit_security_algebraic(params: SchemeParams, family: DemandFamily, W, q1: QueryMatrix,
                             variant: SchemeVariant = HONEST) -> AuditReport:
    """Structural per-round check usable at any scale.

    (a) every Q_n agrees with Q_1 on all interference columns, and (b) each
    answer entry m carries exactly the key S_m with coefficient one, probed
    by answering against a zero-message database with unit key vectors.
    """
    require_well_formed(family)
    part = partition_demand(W, params)
    queries = variant.queries(params, part, StreamSource(q1.flat()))
    L = params.L
    interference_cols = {column(i, l, L): (i, l) for i in range(1, params.K + 1)
                         if i not in part.demand for l in range(1, L + 1)}
    leaks = []
    for n, Qn in enumerate(queries[1:], start=2):
        for m in range(params.M):
            for c, (a, b) in enumerate(zip(queries[0].rows[m], Qn.rows[m]), start=1):
                if a != b and c in interference_cols:
                    i, l = interference_cols[c]
                    leaks.append({"server": n, "row": m + 1, "message": i, "subpacket": l})

    zero_msgs = [[0] * L for _ in range(params.K)]
    mask_faults = []
    for n, Q in enumerate(queries, start=1):
        for k in range(params.M):
            keys = [1 if j == k else 0 for j in range(params.M)]
            ans = variant.answer(Q, Database.from_ints(params.q, zero_msgs, keys)).ints()
            for m, v in enumerate(ans):
                if v != (1 if m == k else 0):
                    mask_faults.append({"server": n, "row": m + 1, "key": k + 1, "coefficient": v})

    passed = not leaks and not mask_faults
    return AuditReport("security_algebraic", instance_descriptor(params, family), passed,
                       {"variant": variant.name, "demand": list(part.demand),
                        "interference_flips": leaks, "mask_faults": mask_faults})


# --- metrics ------------------------------------------------------------------------------

def verify_metrics(params: SchemeParams) -> AuditReport:
    N, D, L, M = params.N, params.D, params.L, params.M
    checks = {
        "rate == 1 - 1/N": params.rate == 1 - Fraction(1, N),
        "M/L == D/(N-1)": Fraction(M, L) == Fraction(D, N - 1) == params.randomness_ratio,
        "L == (N-1)/gcd(D,N-1)": L == Fraction(N - 1, math.gcd(D, N - 1)),
        "N*M*rate == D*L": N * M * params.rate == D * L,
    }
    return AuditReport("metrics", instance_descriptor(params), all(checks.values()),
                       {"checks": checks, "G": params.G, "L": L, "M": M,
                        "rate": params.rate, "randomness_ratio": params.randomness_ratio})
