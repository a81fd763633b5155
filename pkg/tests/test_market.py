from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from rightsmarket.market import (Basket, Buyer, GoodUtility, MarketError, MarketSpec, Mode, MoneyUtility,
                                 Seller, basket_price, buyer_validity_failure, check_valid_endowments,
                                 endowment_price, eval_good_utility, eval_money_utility, make_market,
                                 offered_volume)


def buyer(money, marginals, rights, alpha=1, **kw):
    return Buyer(id=0, money=F(money), good_utility=GoodUtility(tuple(F(v) for v in marginals)),
                 money_utility=MoneyUtility(F(alpha)), rights=rights, **kw)


@pytest.mark.parametrize("x, expected", [(0, 0), (2, 5), (10, 6)])
def test_good_utility_sums_and_saturates(x, expected):
    assert eval_good_utility(GoodUtility((F(3), F(2), F(1))), x) == expected


@pytest.mark.parametrize("alpha, y, expected", [(1, 0, 0), (2, 3, 6), (F(1, 2), 5, F(5, 2))])
def test_money_utility_is_linear(alpha, y, expected):
    assert eval_money_utility(MoneyUtility(F(alpha)), y) == expected


def test_money_utility_rejects_negative_amount():
    with pytest.raises(MarketError):
        eval_money_utility(MoneyUtility(F(1)), -1)


@pytest.mark.parametrize("marginals", [(), (1, 2), (0,), (-1,)])
def test_good_utility_rejects_bad_marginals(marginals):
    with pytest.raises(MarketError):
        GoodUtility(tuple(F(v) for v in marginals))


@given(st.lists(st.integers(1, 50), min_size=1, max_size=8), st.integers(0, 20))
def test_good_utility_is_concave_and_saturating(raw, x):
    marg = tuple(sorted((F(v) for v in raw), reverse=True))
    u = GoodUtility(marg)
    assert u(x) == sum(marg[:x])
    assert u(x + 1) - u(x) <= u(x) - u(x - 1) if x >= 1 else True
    assert u(len(marg) + x) == u(len(marg))


def test_validity_examples():
    assert buyer_validity_failure(buyer(20, (3, 2, 1), 2)) is None
    assert buyer_validity_failure(buyer(7, (3, 2, 1), 2)) == 1
    assert buyer_validity_failure(buyer(10, (3, 3, 2, 2), 2)) == 3


def test_validity_clause_one_is_strict():
    assert buyer_validity_failure(buyer(8, (2, 2), 2)) == 1
    assert buyer_validity_failure(buyer(9, (2, 2), 2)) is None


def test_validity_clause_two():
    # The share of two items is worth 7/2 < 2 * alpha * 2.
    assert buyer_validity_failure(buyer(20, (3, F(1, 2)), 2)) == 2
    assert buyer_validity_failure(buyer(20, (3, 1), 2)) is None


def test_validity_report_names_clause():
    m = make_market([2], [dict(money=7, marginals=[3, 2, 1])], epsilon=F(1, 10), assign_rights=False)
    m = m.with_rights()
    rep = check_valid_endowments(m)
    assert not rep.ok
    assert rep.failures == {0: 1}
    assert "clause 1" in rep.describe()


@pytest.mark.parametrize("basket, p, q, expected", [
    (Basket(0, 0, F(5)), 1, 1, 5),
    (Basket(2, 2, F(1)), 3, 3, 13),
    (Basket(1, 2, F(0)), 2, 4, 10),
])
def test_basket_price(basket, p, q, expected):
    assert basket_price(basket, p, q) == expected


def test_endowment_price_buyer_and_seller():
    m = make_market([3], [dict(money=20, marginals=[6, 5])], epsilon=F(1, 10))
    assert endowment_price(m, 0, F(2), F(3)) == 20 + 3 * 2
    assert endowment_price(m, 1, F(2), F(3)) == 6


def test_offered_volume():
    m = make_market([2, 3], [dict(money=40, marginals=[6, 5, 4, 4, 3])], epsilon=F(1, 10))
    assert offered_volume(m) == 5
    m1 = make_market([1], [dict(money=20, marginals=[6])], epsilon=F(1, 10))
    assert offered_volume(m1) == 1


def test_zero_volume_is_rejected():
    with pytest.raises(MarketError):
        make_market([0, 0], [dict(money=20, marginals=[6])], epsilon=F(1, 10))


@pytest.mark.parametrize("eps", [0, 1, F(-1, 2), F(3, 2)])
def test_epsilon_must_lie_strictly_between_zero_and_one(eps):
    with pytest.raises(MarketError):
        make_market([1], [dict(money=20, marginals=[6])], epsilon=eps)


def test_ids_must_be_unique_across_traders():
    b = buyer(20, (6,), 1)
    with pytest.raises(MarketError):
        MarketSpec((Seller(id=0, good=1),), (b,), F(1, 10), Mode.UNRESTRICTED)


def test_spend_cap_uses_willingness():
    assert buyer(20, (6,), 1).spend_cap == 20
    assert buyer(20, (6,), 1, willingness=F(5)).spend_cap == 5
    assert buyer(20, (6,), 1, willingness=F(50)).spend_cap == 20


def test_with_rights_runs_the_mechanism():
    m = make_market([10], [dict(money=100, marginals=[9] * 7), dict(money=100, marginals=[9] * 7),
                           dict(money=100, marginals=[9] * 6)], epsilon=F(1, 10))
    assert [b.rights for b in m.buyers] == [4, 3, 3]
    m2 = m.with_rights("uniform")
    assert [b.rights for b in m2.buyers] == [4, 3, 3]
    assert m2.mechanism == "uniform"
