"""Brute-force checks of a solved market.

Nothing here looks at auction internals: the checks only read the market
and the returned Solution (plus the run counters for the complexity bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from rightsmarket.market import (Buyer, MarketSpec, Mode, Solution, basket_price, endowment_price)


@dataclass(frozen=True)
class BuyerCheck:
    buyer: int
    achieved_utility: Fraction
    oracle_utility: Fraction
    oracle_couples: int

    @property
    def ratio(self) -> Fraction | None:
        if self.oracle_utility == 0:
            return None
        return self.achieved_utility / self.oracle_utility


@dataclass(frozen=True)
class TraderCheck:
    trader: int
    basket_price: Fraction
    endowment_price: Fraction


@dataclass(frozen=True)
class Failure:
    check: str
    detail: str


@dataclass
class VerificationReport:
    buyers: list[BuyerCheck] = field(default_factory=list)
    traders: list[TraderCheck] = field(default_factory=list)
    failures: list[Failure] = field(default_factory=list)
    price_equality: bool = True
    feasibility_ok: bool = True
    step_bound_ok: bool | None = None

    @property
    def ok(self) -> bool:
        return not self.failures

    def failed_checks(self) -> set[str]:
        return {f.check for f in self.failures}


def own_money_needed(k: int, p: Fraction, q: Fraction, rights: int, mode: Mode | str) -> Fraction:
    """Money of the buyer's own that ``k`` Couples consume beyond its rights.

    Unrestricted trading lets proceeds from every unused Right pay for Couples;
    restricted trading only lets the buyer's own rights stand in for the Right
    half of a Couple.
    """
    c = p + q
    if Mode(mode) is Mode.RESTRICTED:
        return c * k - q * min(k, rights)
    return c * k - q * rights


def optimal_basket_at_prices(b: Buyer, p: Fraction, q: Fraction, budget: Fraction,
                             mode: Mode | str = Mode.UNRESTRICTED) -> tuple[int, Fraction, Fraction]:
    """Best ``(couples, money, utility)`` for ``b`` at fixed prices, by enumeration.

    Each Couple costs ``p + q``; the rest of the budget is held as Money. The
    buyer never spends more of its own Money than its spending cap, and in
    restricted mode proceeds from rights it sells do not count towards that.
    Ties go to the smallest ``k``.
    """
    c = p + q
    rights = b.rights or 0
    best = None
    for k in range(b.claim + 1):
        spend = c * k
        if spend > budget or own_money_needed(k, p, q, rights, mode) > b.spend_cap:
            break
        money = budget - spend
        util = b.good_utility(k) + b.alpha * money
        if best is None or util > best[2]:
            best = (k, money, util)
    return best


def step_bound(n_buyers: int, volume: int, total_money: Fraction, eps: Fraction) -> float:
    return n_buyers ** 2 * math.log2(volume) * (1 + math.log(total_money) / math.log(1 + eps))


def verify_solution(m: MarketSpec, s: Solution, stats=None) -> VerificationReport:
    """Check a solution against the guarantees of the auction.

    Checks: ``price_equality`` (p == q), ``approximation`` (every buyer within
    a factor 1 - eps of its best basket at the final prices), ``budget``
    (basket price in (endowment - 1, endowment]), ``feasibility`` (Right
    covers Good, nothing created out of thin air), ``sellers_sold_out`` and,
    when run counters are given, ``complexity``.
    """
    rep = VerificationReport()
    p, q, eps = s.price_good, s.price_right, m.epsilon

    def fail(check, detail):
        rep.failures.append(Failure(check, detail))

    if p != q:
        rep.price_equality = False
        fail("price_equality", f"price of Good {p} differs from price of Right {q}")
    if p <= 0 or q <= 0:
        fail("price_equality", "prices must be positive")

    traders = [b.id for b in m.buyers] + [t.id for t in m.sellers]
    missing = [t for t in traders if t not in s.baskets]
    if missing or set(s.baskets) - set(traders):
        rep.feasibility_ok = False
        fail("feasibility", f"baskets do not match traders (missing {missing})")
        return rep

    for b in m.buyers:
        bk = s.baskets[b.id]
        if bk.rights < bk.good:
            rep.feasibility_ok = False
            fail("feasibility", f"buyer {b.id} holds {bk.good} Good but only {bk.rights} Right")
        budget = endowment_price(m, b.id, p, q)
        k, _, best = optimal_basket_at_prices(b, p, q, budget, m.mode)
        got = b.good_utility(bk.good) + b.alpha * bk.money
        rep.buyers.append(BuyerCheck(b.id, got, best, k))
        if got < (1 - eps) * best:
            fail("approximation", f"buyer {b.id} utility {got} below (1-eps) * {best}")
        needed = own_money_needed(bk.good, p, q, b.rights or 0, m.mode)
        if bk.good and needed > b.spend_cap:
            fail("feasibility", f"buyer {b.id} spends {needed} of own Money above its cap {b.spend_cap}")

    for t in traders:
        price = basket_price(s.baskets[t], p, q)
        endow = endowment_price(m, t, p, q)
        rep.traders.append(TraderCheck(t, price, endow))
        if not endow - 1 < price <= endow:
            fail("budget", f"trader {t} basket price {price} outside ({endow} - 1, {endow}]")

    total_good = sum(bk.good for bk in s.baskets.values())
    total_rights = sum(bk.rights for bk in s.baskets.values())
    total_money = sum((bk.money for bk in s.baskets.values()), Fraction(0))
    issued = sum(b.rights or 0 for b in m.buyers)
    if total_good > m.volume or total_rights > issued or total_money > m.total_money:
        rep.feasibility_ok = False
        fail("feasibility", "baskets hold more than the initial endowments")

    for t in m.sellers:
        if s.baskets[t.id].good:
            fail("sellers_sold_out", f"seller {t.id} kept {s.baskets[t.id].good} Good")

    if stats is not None:
        bound = step_bound(len(m.buyers), m.volume, m.total_money, eps)
        rep.step_bound_ok = stats.steps <= bound
        if not rep.step_bound_ok:
            fail("complexity", f"{stats.steps} steps exceed the bound {bound:.2f}")
        per_iter = 2 + len(m.buyers)
        if max(stats.rounds_per_iteration) > per_iter:
            fail("complexity", f"an iteration took more than {per_iter} rounds")
        it_bound = 1 + math.log(m.total_money) / math.log(1 + eps)
        if stats.iterations > it_bound:
            fail("complexity", f"{stats.iterations} iterations exceed {it_bound:.2f}")
    return rep
