"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import itertools
import json
import math
import random
import time
from fractions import Fraction as F

import pytest

from rightsmarket.auction import demand_count, replay, solve
from rightsmarket.codec import decode, dumps_line
from rightsmarket.crisis import CrisisSpec, check_theorem3, run_crisis
from rightsmarket.frustration import market_frustration_report
from rightsmarket.market import Mode, basket_price, endowment_price, make_market
from rightsmarket.rights import MECHANISMS, distribute
from rightsmarket.scenario import generate_crisis_template, generate_instance

EPSILONS = (F(1, 2), F(1, 10), F(1, 100))


def corpus_spec(i):
    rng = random.Random(1000 + i)
    return generate_instance(i, rng.randint(1, 5), rng.randint(1, 3), 10, epsilon=EPSILONS[i % 3])


@pytest.fixture(scope="module")
def corpus():
    """The 200 generated valid instances, solved once with invariant checks on."""
    start = time.perf_counter()
    runs = [solve(corpus_spec(i)) for i in range(200)]
    return runs, time.perf_counter() - start


def best_utility(b, p, q, budget):
    """Enumerate k = 0..D_b Couples at price p + q; the rest of the budget stays Money."""
    c = p + q
    return max(b.good_utility(k) + b.alpha * (budget - c * k)
               for k in range(len(b.good_utility.marginals) + 1) if c * k <= budget)


def log_base(x, base):
    return math.log(x) / math.log(base)


def test_criterion_1_price_equality(corpus, criterion):
    runs, seconds = corpus
    unequal = [r.spec for r in runs if r.solution.price_good != r.solution.price_right]
    assert criterion(1, not unequal and seconds < 10), (len(unequal), seconds)


def test_criterion_2_approximation(corpus, criterion):
    runs, _ = corpus
    short = []
    for r in runs:
        s, eps = r.solution, r.spec.epsilon
        assert all(b.willingness is None for b in r.spec.buyers)
        for b in r.spec.buyers:
            bk = s.baskets[b.id]
            got = b.good_utility(bk.good) + b.alpha * bk.money
            best = best_utility(b, s.price_good, s.price_right, endowment_price(r.spec, b.id, s.price_good,
                                                                                 s.price_right))
            if got < (1 - eps) * best:
                short.append((b.id, got, best))
    assert criterion(2, not short), short[:5]


def test_criterion_3_budget_tightness(corpus, criterion):
    runs, _ = corpus
    outside = []
    for r in runs:
        p, q = r.solution.price_good, r.solution.price_right
        for t, bk in r.solution.baskets.items():
            endow = endowment_price(r.spec, t, p, q)
            if not endow - 1 < basket_price(bk, p, q) <= endow:
                outside.append((t, basket_price(bk, p, q), endow))
    assert criterion(3, not outside), outside[:5]


def test_criterion_4_complexity(corpus, criterion):
    runs, _ = corpus
    bad = []
    for r in runs:
        m, st = r.spec, r.stats
        n, iters = len(m.buyers), 1 + log_base(m.total_money, 1 + m.epsilon)
        if st.steps > n ** 2 * math.log2(m.volume) * iters:
            bad.append(("steps", st.steps))
        if max(st.rounds_per_iteration) > 2 + n:
            bad.append(("rounds", st.rounds_per_iteration))
        if st.iterations > iters:
            bad.append(("iterations", st.iterations))
    assert criterion(4, not bad), bad[:5]


def test_criterion_5_first_iteration_pairing(corpus, criterion):
    runs, _ = corpus
    loose = [r.stats.loose_after_first_iteration for r in runs if r.stats.loose_after_first_iteration != (0, 0)]
    assert criterion(5, not loose), loose[:5]


def test_criterion_6_cash_bounds(corpus, criterion):
    # solve() checks both bounds after every event and raises on a breach;
    # the recorded maxima confirm it on the finished runs.
    runs, _ = corpus
    bad = [r.stats for r in runs if r.stats.max_buyer_cash_ratio > 2
           or (r.stats.max_total_cash_ratio_after_first or 0) > 1]
    assert criterion(6, not bad), bad[:3]


def test_criterion_7_potential_frustration(corpus, criterion):
    runs, _ = corpus
    over = [(r.spec, rec) for r in runs for rec in market_frustration_report(r.spec, r.solution, r.trace)
            if rec.pf > F(1, 2)]
    m = make_market([2], [dict(money=10, marginals=[3]), dict(money=82, marginals=[20, 20])], epsilon=F(1, 10))
    res = solve(m)
    hand = {rec.buyer: rec for rec in market_frustration_report(m, res.solution, res.trace)}[0]
    exact = hand.acquired_with_initial_money == 0 and hand.pf == F(1, 2)
    assert criterion(7, not over and exact), (len(over), hand)


@pytest.mark.xfail(strict=True, reason="crisis rounds restart the ascending auction; see the decision ledger")
def test_criterion_8_crisis(criterion):
    start = time.perf_counter()
    failing = {}
    for seed in range(30):
        recs = run_crisis(CrisisSpec(generate_crisis_template(seed), 5, mode=Mode.RESTRICTED))
        if violations := check_theorem3(recs):
            failing[seed] = sorted({v.clause for v in violations})
    seconds = time.perf_counter() - start
    assert criterion(8, not failing and seconds < 30), f"{len(failing)}/30 crises violate: {failing}"


def test_criterion_9_rights_mechanisms(criterion):
    problems = []
    for n in range(1, 5):
        for claims in itertools.product(range(7), repeat=n):
            if not any(claims):
                continue
            for volume, mech in itertools.product(range(1, 13), sorted(MECHANISMS)):
                r = distribute(mech, volume, claims)
                if sum(claims) >= volume and sum(r) != volume:
                    problems.append((mech, volume, claims, "sum"))
                if not all(0 <= x <= d for x, d in zip(r, claims)):
                    problems.append((mech, volume, claims, "bounds"))
                for a, c in itertools.combinations(range(n), 2):
                    if claims[a] == claims[c] and r[a] - r[c] not in (0, 1):
                        problems.append((mech, volume, claims, "equal treatment"))
                    if mech in ("proportional", "cea"):
                        hi, lo = (a, c) if claims[a] > claims[c] else (c, a)
                        if claims[hi] != claims[lo] and r[hi] < r[lo]:
                            problems.append((mech, volume, claims, "order"))
    assert criterion(9, not problems), problems[:5]


def enumerate_demand(marginals, alpha, price, wealth):
    best_k, best_u = 0, F(0)
    for k in range(1, len(marginals) + 1):
        if price * k > wealth:
            break
        u = sum(marginals[:k]) - alpha * price * k
        if u > best_u:
            best_k, best_u = k, u
    return best_k


def test_criterion_10_demand_oracle(criterion):
    rng = random.Random(10)
    mismatches = []
    for _ in range(10 ** 4):
        marg = tuple(sorted((F(rng.randint(1, 60), rng.randint(1, 4)) for _ in range(rng.randint(1, 8))),
                            reverse=True))
        alpha, price = F(rng.randint(1, 8), rng.randint(1, 4)), F(rng.randint(1, 40), rng.randint(1, 4))
        wealth = F(rng.randint(0, 300), rng.randint(1, 3))
        if demand_count(marg, alpha, price, wealth)[0] != enumerate_demand(marg, alpha, price, wealth):
            mismatches.append((marg, alpha, price, wealth))
    assert criterion(10, not mismatches), mismatches[:3]


def test_criterion_11_determinism_and_replay(criterion):
    ok = True
    for i in range(0, 200, 10):
        spec = corpus_spec(i)
        first, second = solve(spec), solve(spec)
        lines = [dumps_line(ev) for ev in first.trace]
        ok &= lines == [dumps_line(ev) for ev in second.trace] and first.solution == second.solution
        again = replay([decode(json.loads(line)) for line in lines])
        ok &= again.solution == first.solution
    assert criterion(11, ok)
