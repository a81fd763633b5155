from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from rightsmarket.auction import solve
from rightsmarket.frustration import (acquired_with_initial_money, frustration, market_frustration_report,
                                      potential_frustration)
from rightsmarket.market import Mode, make_market
from rightsmarket.scenario import generate_instance


def half_instance():
    """Buyer 0 is outbid for the single Good its Right covers and ends with none."""
    return make_market([2], [dict(money=10, marginals=[3]), dict(money=82, marginals=[20, 20])],
                       epsilon=F(1, 10))


@pytest.mark.parametrize("assigned, acquired, expected", [(10, 4, F(3, 5)), (10, 12, 0), (0, 0, 0)])
def test_frustration_examples(assigned, acquired, expected):
    assert frustration(assigned, acquired) == expected


def test_potential_frustration_examples():
    assert potential_frustration(10, 0, F(2), F(2)) == F(1, 2)
    assert potential_frustration(10, 10, F(2), F(7)) == 0
    assert potential_frustration(8, 2, F(3), F(1)) == F(9, 16)


def test_potential_frustration_rejects_bad_input():
    with pytest.raises(ValueError):
        potential_frustration(3, 1, F(0), F(1))
    with pytest.raises(ValueError):
        frustration(-1, 0)


@given(st.integers(0, 30), st.integers(0, 40), st.integers(1, 20))
def test_equal_prices_cap_potential_frustration_at_half(assigned, acquired, price):
    pf = potential_frustration(assigned, acquired, F(price), F(price))
    assert 0 <= pf <= F(1, 2)
    assert pf <= frustration(assigned, acquired)


def test_hand_built_instance_reaches_one_half():
    m = half_instance()
    assert [b.rights for b in m.buyers] == [1, 1]
    res = solve(m)
    rec = {r.buyer: r for r in market_frustration_report(m, res.solution, res.trace)}
    assert rec[0].acquired == 0 and rec[0].acquired_with_initial_money == 0
    assert rec[0].f == 1
    assert rec[0].pf == F(1, 2)
    assert rec[1].f == 0


def test_potential_frustration_capped_on_solved_instances():
    for seed in range(25):
        m = generate_instance(seed, 4, 2, 10, mode=[Mode.UNRESTRICTED, Mode.RESTRICTED][seed % 2])
        res = solve(m)
        for r in market_frustration_report(m, res.solution, res.trace):
            assert r.pf <= F(1, 2)
            assert r.acquired_with_initial_money <= r.acquired


def test_full_claim_means_no_frustration():
    m = make_market([2], [dict(money=24, marginals=[6, 5])], epsilon=F(1, 10))
    res = solve(m)
    (rec,) = market_frustration_report(m, res.solution, res.trace)
    assert rec.f == 0 and rec.pf == 0


def test_missing_trace_omits_potential_frustration():
    m = half_instance()
    sol = solve(m).solution
    with pytest.warns(UserWarning, match="potential frustration"):
        recs = market_frustration_report(m, sol)
    assert all(r.pf is None for r in recs)


def test_self_purchases_do_not_count_as_acquisitions():
    trace = [
        {"kind": "couple_formed", "couple": 0, "buyer": 0, "paid": F(22, 10), "p": F(1), "q": F(1)},
        {"kind": "outbid_purchase", "couple": 0, "buyer": 0, "from": 0, "paid": F(4), "p": F(2), "q": F(2)},
        {"kind": "couple_formed", "couple": 1, "buyer": 0, "paid": F(22, 10), "p": F(1), "q": F(1)},
        {"kind": "outbid_purchase", "couple": 1, "buyer": 1, "from": 0, "paid": F(4), "p": F(2), "q": F(2)},
    ]
    assert acquired_with_initial_money(trace, 0, F(100)) == 1
    assert acquired_with_initial_money(trace, 0, F(1)) == 0
    assert acquired_with_initial_money(trace, 1, F(2)) == 1
