"""Single-round market: traders, utilities, endowment validity and basket pricing.

All money and price quantities are :class:`fractions.Fraction` so that
equalities between prices can be checked exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from rightsmarket.rights import distribute

Number = int | Fraction


class MarketError(ValueError):
    """Raised for malformed or degenerate market data."""


class Mode(str, Enum):
    UNRESTRICTED = "unrestricted"
    RESTRICTED = "restricted"


@dataclass(frozen=True)
class GoodUtility:
    """Concave Good-utility given by per-item marginal values.

    ``marginals[i]`` is the value of the (i+1)-th item. The claim is the
    number of marginals; utility saturates there.
    """

    marginals: tuple[Fraction, ...]

    def __post_init__(self):
        ms = tuple(Fraction(v) for v in self.marginals)
        if not ms:
            raise MarketError("Good-utility needs at least one marginal value")
        if any(v <= 0 for v in ms):
            raise MarketError("marginal values must be positive")
        if any(a < b for a, b in zip(ms, ms[1:])):
            raise MarketError("marginal values must be nonincreasing")
        object.__setattr__(self, "marginals", ms)

    @property
    def claim(self) -> int:
        return len(self.marginals)

    def __call__(self, x: int) -> Fraction:
        return eval_good_utility(self, x)


@dataclass(frozen=True)
class MoneyUtility:
    alpha: Fraction = Fraction(1)

    def __post_init__(self):
        a = Fraction(self.alpha)
        if a <= 0:
            raise MarketError("alpha must be positive")
        object.__setattr__(self, "alpha", a)

    def __call__(self, y: Number) -> Fraction:
        return eval_money_utility(self, y)


@dataclass(frozen=True)
class Seller:
    id: int
    good: int
    # Inert: sellers sell everything at any positive price.
    money_utility: MoneyUtility = field(default_factory=MoneyUtility)

    def __post_init__(self):
        if self.good < 0:
            raise MarketError(f"seller {self.id}: negative good count")


@dataclass(frozen=True)
class Buyer:
    """A buyer's endowment and preferences.

    ``rights`` is filled by stage one (rights distribution). ``willingness``
    optionally caps how much of ``money`` the buyer is prepared to spend in
    this round; ``None`` means no cap.
    """

    id: int
    money: Fraction
    good_utility: GoodUtility
    money_utility: MoneyUtility = field(default_factory=MoneyUtility)
    rights: int | None = None
    willingness: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "money", Fraction(self.money))
        if self.money < 0:
            raise MarketError(f"buyer {self.id}: negative money")
        if self.rights is not None and self.rights < 0:
            raise MarketError(f"buyer {self.id}: negative rights")
        if self.willingness is not None:
            w = Fraction(self.willingness)
            if w < 0:
                raise MarketError(f"buyer {self.id}: negative willingness")
            object.__setattr__(self, "willingness", w)

    @property
    def claim(self) -> int:
        return self.good_utility.claim

    @property
    def alpha(self) -> Fraction:
        return self.money_utility.alpha

    @property
    def spend_cap(self) -> Fraction:
        """Money the buyer is prepared to spend this round."""
        if self.willingness is None:
            return self.money
        return min(self.money, self.willingness)


@dataclass(frozen=True)
class MarketSpec:
    sellers: tuple[Seller, ...]
    buyers: tuple[Buyer, ...]
    epsilon: Fraction
    mode: Mode = Mode.UNRESTRICTED
    mechanism: str = "proportional"

    def __post_init__(self):
        object.__setattr__(self, "sellers", tuple(sorted(self.sellers, key=lambda s: s.id)))
        object.__setattr__(self, "buyers", tuple(sorted(self.buyers, key=lambda b: b.id)))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.epsilon < 1:
            raise MarketError("epsilon must lie strictly between 0 and 1")
        if not self.buyers:
            raise MarketError("market needs at least one buyer")
        if not self.sellers:
            raise MarketError("market needs at least one seller")
        seller_ids = [s.id for s in self.sellers]
        buyer_ids = [b.id for b in self.buyers]
        if len(set(seller_ids)) != len(seller_ids) or len(set(buyer_ids)) != len(buyer_ids):
            raise MarketError("trader ids must be unique")
        if set(seller_ids) & set(buyer_ids):
            raise MarketError("seller and buyer ids must be disjoint")
        offered_volume(self)

    @property
    def volume(self) -> int:
        return offered_volume(self)

    @property
    def total_money(self) -> Fraction:
        return sum((b.money for b in self.buyers), Fraction(0))

    @property
    def rights_assigned(self) -> bool:
        return all(b.rights is not None for b in self.buyers)

    def buyer(self, bid: int) -> Buyer:
        for b in self.buyers:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def seller(self, sid: int) -> Seller:
        for s in self.sellers:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def with_rights(self, mechanism: str | None = None) -> MarketSpec:
        """Run stage one: distribute the offered volume of Right by claims."""
        mech = mechanism or self.mechanism
        alloc = distribute(mech, self.volume, [b.claim for b in self.buyers])
        buyers = tuple(replace(b, rights=r) for b, r in zip(self.buyers, alloc))
        return replace(self, buyers=buyers, mechanism=mech)

    def with_willingness(self, willingness: Mapping[int, Fraction | None]) -> MarketSpec:
        buyers = tuple(replace(b, willingness=willingness.get(b.id, b.willingness))
                       for b in self.buyers)
        return replace(self, buyers=buyers)


@dataclass(frozen=True)
class Basket:
    good: int = 0
    rights: int = 0
    money: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "money", Fraction(self.money))
        if self.good < 0 or self.rights < 0 or self.money < 0:
            raise MarketError("basket quantities must be non-negative")


@dataclass(frozen=True)
class Solution:
    """Terminal prices plus one basket per trader. Money is priced at 1."""

    price_good: Fraction
    price_right: Fraction
    baskets: Mapping[int, Basket]

    @property
    def price_couple(self) -> Fraction:
        return self.price_good + self.price_right


def eval_good_utility(u: GoodUtility, x: int) -> Fraction:
    if x < 0:
        raise MarketError("negative Good amount")
    return sum(u.marginals[:x], Fraction(0))


def eval_money_utility(u: MoneyUtility, y: Number) -> Fraction:
    y = Fraction(y)
    if y < 0:
        raise MarketError("negative Money amount")
    return u.alpha * y


def basket_price(b: Basket, p: Number, q: Number) -> Fraction:
    return Fraction(p) * b.good + Fraction(q) * b.rights + b.money


def endowment_price(m: MarketSpec, trader_id: int, p: Number, q: Number) -> Fraction:
    """Price of a trader's initial endowment (Money priced at 1)."""
    for s in m.sellers:
        if s.id == trader_id:
            return Fraction(p) * s.good
    b = m.buyer(trader_id)
    return b.money + Fraction(q) * (b.rights or 0)


def offered_volume(m: MarketSpec) -> int:
    v = sum(s.good for s in m.sellers)
    if v < 1:
        raise MarketError("degenerate market: no Good offered")
    return v


@dataclass(frozen=True)
class ValidityReport:
    """Per-buyer validity outcome; ``failures`` maps buyer id to the failed clause."""

    failures: Mapping[int, int]
    checked: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def describe(self) -> str:
        if self.ok:
            return "all endowments valid"
        return "; ".join(f"buyer {b}: {CLAUSE_TEXT[c]}" for b, c in sorted(self.failures.items()))


CLAUSE_TEXT = {
    1: "clause 1 (money must exceed four times the rights)",
    2: "clause 2 (utility of each fair share must be at least twice its money value)",
    3: "clause 3 (money must be preferred to Good from half the money upward)",
}


def buyer_validity_failure(b: Buyer) -> int | None:
    """First failed validity clause for a buyer with assigned rights, or None."""
    if b.rights is None:
        raise MarketError(f"buyer {b.id}: rights not assigned")
    u, alpha, r = b.good_utility, b.alpha, b.rights
    if not b.money > 4 * r:
        return 1
    for x in range(1, r + 1):
        if u(x) < 2 * alpha * x:
            return 2
    # Beyond the claim utility is flat while alpha*x keeps growing, so the
    # finite range below decides the clause for every integer x >= M/2.
    lo = max(math.ceil(b.money / 2), 0)
    for x in range(lo, max(lo, b.claim) + 1):
        if not alpha * x > u(x):
            return 3
    return None


def check_valid_endowments(m: MarketSpec) -> ValidityReport:
    failures = {}
    for b in m.buyers:
        clause = buyer_validity_failure(b)
        if clause is not None:
            failures[b.id] = clause
    return ValidityReport(failures=failures, checked=tuple(b.id for b in m.buyers))


def make_market(sellers: Iterable[int], buyers: Sequence[Mapping], epsilon: Number,
                mode: Mode | str = Mode.UNRESTRICTED, mechanism: str = "proportional",
                assign_rights: bool = True) -> MarketSpec:
    """Convenience constructor: buyers get ids 0..n-1, sellers follow.

    Each buyer mapping has ``money``, ``marginals`` and optionally ``alpha``,
    ``rights`` and ``willingness``.
    """
    buyer_objs = []
    for i, d in enumerate(buyers):
        buyer_objs.append(Buyer(
            id=i,
            money=Fraction(d["money"]),
            good_utility=GoodUtility(tuple(Fraction(v) for v in d["marginals"])),
            money_utility=MoneyUtility(Fraction(d.get("alpha", 1))),
            rights=d.get("rights"),
            willingness=d.get("willingness"),
        ))
    n = len(buyer_objs)
    seller_objs = [Seller(id=n + j, good=g) for j, g in enumerate(sellers)]
    spec = MarketSpec(tuple(seller_objs), tuple(buyer_objs), Fraction(epsilon), Mode(mode), mechanism)
    if assign_rights and not spec.rights_assigned:
        spec = spec.with_rights()
    return spec
