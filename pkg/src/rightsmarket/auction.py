"""Ascending auction over Couples (one Good paired with one Right).

Buyers start with cash equal to the value of their Money and Right at the
initial prices ``p = q = 1``. In each round every buyer computes the number
of Couples it would ideally hold at the current Couple price ``c = p + q``
and outbids for the missing ones at ``(1 + eps) * c``. Once every Couple has
been bought at the raised price the iteration ends, all prices grow by the
factor ``1 + eps`` and endowment owners are credited the appreciation.
Trading stops after a full round without purchases; cash is then exchanged
for Money at price 1.

Every state change is an event. The live solver builds an event and hands it
to :meth:`AuctionState.apply`, so a recorded trace can be replayed into an
identical state without re-running any decision logic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from rightsmarket.codec import spec_from_dict, spec_to_dict

try:
    # Exact rationals; several times faster than Fraction on long runs.
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction
from rightsmarket.market import (Basket, MarketSpec, Mode, Solution, check_valid_endowments)


def _frac(x) -> Fraction:
    """Plain-int Fraction from any rational (mpq numerators are mpz)."""
    return Fraction(int(x.numerator), int(x.denominator))


class InvalidEndowments(ValueError):
    def __init__(self, report):
        super().__init__(report.describe())
        self.report = report


class SolverAbort(RuntimeError):
    """The iteration guard tripped; indicates a bug rather than bad input."""


class InvariantViolation(AssertionError):
    pass


class ReplayMismatch(ValueError):
    pass


@dataclass
class Couple:
    id: int
    owner: int
    seller: int
    right_owner: int
    raised: bool = True


@dataclass
class SolveStats:
    iterations: int
    rounds: int
    steps: int
    rounds_per_iteration: list[int]
    loose_after_first_iteration: tuple[int, int] | None
    max_buyer_cash_ratio: Fraction
    max_total_cash_ratio_after_first: Fraction | None

    def step_bound(self, n_buyers: int, volume: int, total_money: Fraction, eps: Fraction) -> float:
        return n_buyers ** 2 * math.log2(volume) * (1 + math.log(total_money) / math.log(1 + eps))

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "rounds": self.rounds,
            "steps": self.steps,
            "rounds_per_iteration": list(self.rounds_per_iteration),
            "loose_after_first_iteration": (None if self.loose_after_first_iteration is None
                                            else list(self.loose_after_first_iteration)),
            "max_buyer_cash_ratio": self.max_buyer_cash_ratio,
            "max_total_cash_ratio_after_first": self.max_total_cash_ratio_after_first,
        }


@dataclass
class SolveResult:
    spec: MarketSpec
    solution: Solution
    trace: list[dict]
    stats: SolveStats
    residual_cash: dict[int, Fraction]
    system_money: Fraction


def iteration_limit(total_money: Fraction, eps: Fraction) -> float:
    """Upper bound on the number of iterations of a correct run."""
    return 1 + math.log(total_money) / math.log(1 + eps)


def demand_count(marginals: Sequence[Fraction], alpha: Fraction, price: Fraction, wealth: Fraction,
                 *, upper: int | None = None, right_price: Fraction = Fraction(0),
                 rights: int = 0, held: int = 0) -> tuple[int, int]:
    """Largest affordable Couple count whose every marginal beats its money cost.

    ``wealth`` is what the buyer could liquidate at ``price``. In restricted
    mode ``right_price`` and ``rights`` describe the cash that must stay
    reserved for rights not covered by a Couple.

    Only counts of at least ``held`` matter to a buyer already holding that
    many Couples, so the search starts there; a return of ``held - 1`` means
    "fewer than held". With ``held=0`` the answer is exact. Returns
    ``(k, probes)``.
    """
    hi = len(marginals) if upper is None else min(upper, len(marginals))

    def fits(k: int) -> bool:
        if k and not marginals[k - 1] > alpha * price:
            return False
        return price * k + right_price * max(0, rights - k) <= wealth

    lo, probes = held, 0
    if held > 0:
        probes += 1
        if held > hi or not fits(held):
            return held - 1, probes
    while lo < hi:
        mid = (lo + hi + 1) // 2
        probes += 1
        if fits(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo, probes


class AuctionState:
    def __init__(self, spec: MarketSpec, *, check: bool = True):
        if not spec.rights_assigned:
            spec = spec.with_rights()
        self.spec = spec
        self.eps = Q(spec.epsilon)
        self.restricted = spec.mode is Mode.RESTRICTED
        self.check = check
        self.p = Q(1)
        self.q = Q(1)
        self.buyer_ids = [b.id for b in spec.buyers]
        self.seller_ids = [s.id for s in spec.sellers]
        self.rights = {b.id: b.rights for b in spec.buyers}
        self.unwilling = {b.id: Q(b.money - b.spend_cap) for b in spec.buyers}
        self.cash = {b.id: Q(b.money) + self.q * b.rights for b in spec.buyers}
        self.cash.update({s.id: Q(0) for s in spec.sellers})
        self.utility = {b.id: (tuple(Q(v) for v in b.good_utility.marginals), Q(b.alpha))
                        for b in spec.buyers}
        self.couples: list[Couple] = []
        self.loose_good = {s.id: s.good for s in spec.sellers}
        self.loose_right = dict(self.rights)
        self.sold_good = {s.id: 0 for s in spec.sellers}
        # Rights are paid for up front inside the initial cash.
        self.pool = -self.q * sum(self.rights.values())
        self.iteration = 1
        self.round = 0
        self.rounds_per_iteration = [0]
        self.steps = 0
        self.total_money = Q(spec.total_money)
        self.loose_after_first: tuple[int, int] | None = None
        self.trace: list[dict] = []
        self.settled = False
        self.final: dict | None = None
        self.n_owned: dict[int, int] = {}
        self.n_raised: dict[int, int] = {}
        self.buyer_cash = sum(self.cash[b] for b in self.buyer_ids)
        self.total_cash = self.buyer_cash
        self.max_buyer_cash = self.buyer_cash
        self.max_total_cash_after_first: Fraction | None = None

    # -- derived quantities -------------------------------------------------

    @property
    def c(self) -> Fraction:
        return self.p + self.q

    def owned(self, t: int) -> int:
        return self.n_owned.get(t, 0)

    def owned_raised(self, t: int) -> int:
        return self.n_raised.get(t, 0)

    def reserve(self, b: int, owned: int) -> Fraction:
        """Cash buyer ``b`` must keep untouched when holding ``owned`` Couples."""
        r = self.unwilling[b]
        if self.restricted:
            r += self.q * max(0, self.rights[b] - owned)
        return r

    def spendable(self, b: int) -> Fraction:
        return self.cash[b] - self.reserve(b, self.owned(b))

    def composable(self) -> bool:
        return any(self.loose_good.values()) and any(self.loose_right.values())

    def available(self) -> bool:
        return self.composable() or len(self.couples) > sum(self.n_raised.values())

    def ideal_demand(self, b: int) -> tuple[int, int]:
        """Ideal Couple count for ``b`` at the current price; see :func:`demand_count`.

        Only Couples purchasable at the base price can join the ideal set, so
        the search is capped by what is on offer besides ``b``'s own holding.
        """
        marginals, alpha = self.utility[b]
        o = self.owned(b)
        on_offer = (len(self.couples) - sum(self.n_raised.values())) - (o - self.owned_raised(b))
        if self.composable():
            on_offer += min(sum(self.loose_good.values()), sum(self.loose_right.values()))
        wealth = self.cash[b] + self.c * o - self.unwilling[b]
        return demand_count(
            marginals, alpha, self.c, wealth,
            upper=o + on_offer,
            right_price=self.q if self.restricted else Q(0),
            rights=self.rights[b], held=o,
        )

    # -- event application --------------------------------------------------

    def record(self, event: dict) -> None:
        self.apply(event)
        self.trace.append(event)

    def _move(self, t: int, amount: Fraction) -> None:
        self.cash[t] += amount
        self.total_cash += amount
        if t in self.rights:
            self.buyer_cash += amount

    def _take(self, t: int) -> None:
        self.n_owned[t] = self.n_owned.get(t, 0) + 1
        self.n_raised[t] = self.n_raised.get(t, 0) + 1

    def apply(self, ev: dict) -> None:
        kind = ev["kind"]
        touched: tuple[int, ...] = ()
        if kind == "init":
            return
        if kind == "demand_query":
            self.steps += ev["probes"] + (1 if ev["acts"] else 0)
            return
        if kind == "round_start":
            self.round += 1
            self.rounds_per_iteration[-1] += 1
            return
        if kind == "couple_formed":
            b, s, r = ev["buyer"], ev["seller"], ev["right_owner"]
            if ev["couple"] != len(self.couples) or not self.loose_good[s] or not self.loose_right[r]:
                raise ReplayMismatch(f"cannot form couple {ev['couple']}")
            self.couples.append(Couple(ev["couple"], b, s, r, raised=True))
            self.loose_good[s] -= 1
            self.loose_right[r] -= 1
            self.sold_good[s] += 1
            self._take(b)
            self._move(b, -ev["paid"])
            self._move(s, ev["credit"])
            self.pool += ev["paid"] - ev["credit"]
            touched = (b, s)
        elif kind == "outbid_purchase":
            cp = self.couples[ev["couple"]]
            b, prev = ev["buyer"], ev["from"]
            if cp.owner != prev or cp.raised:
                raise ReplayMismatch(f"couple {cp.id} is not on offer from {prev}")
            self._move(b, -ev["paid"])
            self._move(prev, ev["credit"])
            self.pool += ev["paid"] - ev["credit"]
            self.n_owned[prev] -= 1
            self._take(b)
            cp.owner = b
            cp.raised = True
            touched = (b, prev)
        elif kind == "price_raise":
            if self.iteration == 1:
                self.loose_after_first = (sum(self.loose_good.values()), sum(self.loose_right.values()))
            self.p, self.q = ev["p"], ev["q"]
            for cp in self.couples:
                cp.raised = False
            self.n_raised.clear()
            self.iteration += 1
            self.round = 0
            self.rounds_per_iteration.append(0)
            touched = tuple(self.buyer_ids)
        elif kind == "cash_topup":
            self._move(ev["trader"], ev["amount"])
            self.pool -= ev["amount"]
            if ev["reason"] != "appreciation":
                self.settled = True
            touched = (ev["trader"],)
        elif kind == "finalize":
            self.final = ev
            return
        else:
            raise ValueError(f"unknown event kind {kind!r}")
        if self.check:
            self.check_invariants(touched)

    def check_invariants(self, touched: Iterable[int] | None = None) -> None:
        """Cash bounds and the per-buyer reserve.

        Totals are checked every time; per-trader conditions only for the
        traders an event touched (all traders when ``touched`` is None).
        """
        m = self.total_money
        if self.buyer_cash > self.max_buyer_cash:
            self.max_buyer_cash = self.buyer_cash
        if self.buyer_cash > 2 * m:
            raise InvariantViolation(f"total buyer cash {self.buyer_cash} exceeds 2m = {2 * m}")
        if self.iteration >= 2:
            prev = self.max_total_cash_after_first
            if prev is None or self.total_cash > prev:
                self.max_total_cash_after_first = self.total_cash
            if self.total_cash > m:
                raise InvariantViolation(f"total cash {self.total_cash} exceeds m = {m} "
                                         "after the first iteration")
        for t in self.cash if touched is None else touched:
            if self.cash[t] < 0:
                raise InvariantViolation(f"trader {t} has negative cash {self.cash[t]}")
            if not self.settled and t in self.rights and self.cash[t] < self.reserve(t, self.owned(t)):
                raise InvariantViolation(f"buyer {t} cash {self.cash[t]} below its reserve")

    # -- live decisions --------------------------------------------------------

    def _next_source(self, b: int):
        for cp in self.couples:
            if cp.owner == b and not cp.raised:
                return ("own", cp)
        if self.composable():
            seller = next(s for s in self.seller_ids if self.loose_good[s])
            if self.loose_right.get(b):
                right_owner = b
            else:
                right_owner = next(r for r in self.buyer_ids if self.loose_right[r])
            return ("compose", seller, right_owner)
        others = [cp for cp in self.couples if cp.owner != b and not cp.raised]
        if others:
            return ("other", min(others, key=lambda cp: (cp.owner, cp.id)))
        return None

    def outbid(self, b: int, want: int) -> int:
        """Buy up to ``want - o_plus`` base-price Couples for ``b``; returns the count."""
        price = (1 + self.eps) * self.c
        bought = 0
        target = want - self.owned_raised(b)
        while bought < target:
            src = self._next_source(b)
            if src is None:
                break
            o = self.owned(b)
            if src[0] == "own":
                cash_after, owned_after = self.cash[b] - price + self.c, o
            else:
                cash_after, owned_after = self.cash[b] - price, o + 1
            if cash_after < self.reserve(b, owned_after):
                break
            if src[0] == "compose":
                _, seller, right_owner = src
                self.record({"kind": "couple_formed", "couple": len(self.couples), "buyer": b,
                             "seller": seller, "right_owner": right_owner, "paid": price,
                             "credit": self.p, "p": self.p, "q": self.q})
            else:
                cp = src[1]
                self.record({"kind": "outbid_purchase", "couple": cp.id, "buyer": b,
                             "from": cp.owner, "paid": price, "credit": self.c,
                             "p": self.p, "q": self.q})
            bought += 1
            if not self.available():
                break
        return bought

    def run_round(self, order: Iterable[int]) -> tuple[bool, bool]:
        """One pass over the buyers; returns ``(any_purchase, iteration_ended)``."""
        self.record({"kind": "round_start", "iteration": self.iteration, "round": self.round + 1})
        any_purchase = False
        for b in order:
            want, probes = self.ideal_demand(b)
            o = self.owned(b)
            acts = want >= o
            self.record({"kind": "demand_query", "buyer": b, "want": want, "owned": o,
                         "owned_raised": self.owned_raised(b), "probes": probes, "acts": acts})
            if acts and self.outbid(b, want):
                any_purchase = True
                if not self.available():
                    return any_purchase, True
        return any_purchase, False

    def end_iteration(self) -> None:
        """Credit endowment appreciation, then raise all prices by ``1 + eps``.

        Credits come first so the restricted reserve, which grows with ``q``,
        stays covered at every intermediate state.
        """
        p_old, q_old = self.p, self.q
        for s in self.seller_ids:
            if self.sold_good[s]:
                self.record({"kind": "cash_topup", "trader": s, "reason": "appreciation",
                             "amount": self.eps * p_old * self.sold_good[s]})
        for b in self.buyer_ids:
            if self.rights[b]:
                self.record({"kind": "cash_topup", "trader": b, "reason": "appreciation",
                             "amount": self.eps * q_old * self.rights[b]})
        self.record({"kind": "price_raise", "iteration": self.iteration,
                     "p": (1 + self.eps) * p_old, "q": (1 + self.eps) * q_old})

    def settle(self, refund_premiums: bool = True) -> None:
        """Close the unfinished last iteration before Money is sold.

        Premiums collected on Couples still at the raised price are handed back
        to their holders, and buyers keep their unsold Right items in kind, so
        the cash that was advanced for them is taken back.
        """
        if refund_premiums:
            for t in self.buyer_ids:
                n = self.owned_raised(t)
                if n:
                    self.record({"kind": "cash_topup", "trader": t, "reason": "premium_refund",
                                 "amount": self.eps * self.c * n})
        for b in self.buyer_ids:
            if self.loose_right[b]:
                self.record({"kind": "cash_topup", "trader": b, "reason": "unsold_rights",
                             "amount": -self.q * self.loose_right[b]})

    def money_sale(self) -> tuple[dict[int, Fraction], dict[int, Fraction], Fraction]:
        """Sell the pooled Money for cash at price 1: buyers first, then sellers."""
        supply = self.total_money
        order = self.buyer_ids + self.seller_ids
        total_cash = sum(self.cash[t] for t in order)
        money, residual = {}, {}
        if total_cash <= supply:
            left = supply
            for t in order:
                amt = min(self.cash[t], left)
                money[t], residual[t] = amt, self.cash[t] - amt
                left -= amt
        else:
            # Defensive: never reached when the total cash bound holds.
            for t in order:
                amt = self.cash[t] * supply / total_cash
                money[t], residual[t] = amt, self.cash[t] - amt
            left = Q(0)
        return money, residual, left

    def build_solution(self, money: dict[int, Fraction]) -> Solution:
        baskets = {}
        for b in self.buyer_ids:
            k = self.owned(b)
            baskets[b] = Basket(good=k, rights=k + self.loose_right[b], money=_frac(money[b]))
        for s in self.seller_ids:
            baskets[s] = Basket(good=self.loose_good[s], rights=0, money=_frac(money[s]))
        return Solution(price_good=_frac(self.p), price_right=_frac(self.q), baskets=baskets)

    def stats(self) -> SolveStats:
        return SolveStats(
            iterations=self.iteration,
            rounds=sum(self.rounds_per_iteration),
            steps=self.steps,
            rounds_per_iteration=list(self.rounds_per_iteration),
            loose_after_first_iteration=self.loose_after_first,
            max_buyer_cash_ratio=_frac(self.max_buyer_cash / self.total_money),
            max_total_cash_ratio_after_first=(None if self.max_total_cash_after_first is None
                                              else _frac(self.max_total_cash_after_first
                                                            / self.total_money)),
        )

    def finalize(self, refund_premiums: bool = True) -> Solution:
        self.settle(refund_premiums)
        money, residual, system_money = self.money_sale()
        sol = self.build_solution(money)
        self.record({
            "kind": "finalize", "p": sol.price_good, "q": sol.price_right,
            "money": [[t, _frac(v)] for t, v in money.items()],
            "residual_cash": [[t, _frac(v)] for t, v in residual.items()],
            "system_money": _frac(system_money),
            "baskets": [[t, b.good, b.rights, b.money] for t, b in sorted(sol.baskets.items())],
            "stats": self.stats().as_dict(),
        })
        return sol


def initialize(spec: MarketSpec, *, check: bool = True) -> AuctionState:
    if not spec.rights_assigned:
        spec = spec.with_rights()
    report = check_valid_endowments(spec)
    if not report.ok:
        raise InvalidEndowments(report)
    st = AuctionState(spec, check=check)
    st.record({"kind": "init", "market": spec_to_dict(spec)})
    return st


def solve(spec: MarketSpec, *, order_seed: int | None = None, refund_premiums: bool = True,
          check: bool = True, validate: bool = True) -> SolveResult:
    """Run the auction to completion.

    ``order_seed`` shuffles the buyer order once (default ascending ids).
    ``validate=False`` skips the endowment validity gate; the crisis driver
    uses it after validating the template itself.
    """
    if validate:
        st = initialize(spec, check=check)
    else:
        st = AuctionState(spec, check=check)
        st.record({"kind": "init", "market": spec_to_dict(st.spec)})
    order = list(st.buyer_ids)
    if order_seed is not None:
        random.Random(order_seed).shuffle(order)
    limit = 2 * iteration_limit(st.total_money, st.eps)
    while True:
        any_purchase, ended = st.run_round(order)
        if ended:
            st.end_iteration()
            if st.iteration > limit:
                raise SolverAbort(f"iteration {st.iteration} exceeds guard {limit:.1f}")
            continue
        if not any_purchase:
            break
    sol = st.finalize(refund_premiums)
    fin = st.final
    return SolveResult(spec=st.spec, solution=sol, trace=st.trace, stats=st.stats(),
                       residual_cash={t: v for t, v in fin["residual_cash"]},
                       system_money=fin["system_money"])


def replay(events: Sequence[dict], *, check: bool = True) -> SolveResult:
    """Rebuild the terminal state from a trace and re-derive the Solution.

    Raises :class:`ReplayMismatch` if the re-derived Money sale or baskets
    differ from what the trace recorded.
    """
    if not events or events[0]["kind"] != "init":
        raise ReplayMismatch("trace must start with an init event")
    spec = spec_from_dict(events[0]["market"])
    st = AuctionState(spec, check=check)
    st.trace.append(events[0])
    for n, ev in enumerate(events[1:], 1):
        try:
            st.record(ev)
        except (InvariantViolation, KeyError, TypeError) as exc:
            raise ReplayMismatch(f"event {n} ({ev.get('kind', '?')}): {exc}") from exc
    if st.final is None:
        raise ReplayMismatch("trace has no finalize event")
    money, residual, system_money = st.money_sale()
    sol = st.build_solution(money)
    recorded = {t: (g, r, m) for t, g, r, m in st.final["baskets"]}
    derived = {t: (b.good, b.rights, b.money) for t, b in sol.baskets.items()}
    if recorded != derived or st.final["p"] != sol.price_good or st.final["q"] != sol.price_right:
        raise ReplayMismatch("replayed solution differs from the recorded one")
    return SolveResult(spec=spec, solution=sol, trace=list(events), stats=st.stats(),
                       residual_cash={t: _frac(v) for t, v in residual.items()},
                       system_money=_frac(system_money))
