"""Frustration of buyers: how far the Good they got falls short of their rights."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from rightsmarket.market import MarketSpec, Solution


@dataclass(frozen=True)
class FrustrationRecord:
    buyer: int
    assigned: int
    acquired: int
    acquired_with_initial_money: int | None
    price_good: Fraction
    price_right: Fraction
    f: Fraction
    pf: Fraction | None


def frustration(assigned: int, acquired: int) -> Fraction:
    """Relative shortfall of acquired Good against assigned rights, clamped at 0.

    A buyer assigned nothing is never frustrated.
    """
    if assigned < 0 or acquired < 0:
        raise ValueError("counts must be non-negative")
    if assigned == 0:
        return Fraction(0)
    return max(Fraction(0), Fraction(assigned - acquired, assigned))


def potential_frustration(assigned: int, acquired_initial: int, d: Fraction, d_right: Fraction) -> Fraction:
    """Frustration discounted by what selling the unused rights could buy.

    ``d`` and ``d_right`` are the prices paid per item of Good and Right.
    """
    if assigned < 0 or acquired_initial < 0:
        raise ValueError("counts must be non-negative")
    d, d_right = Fraction(d), Fraction(d_right)
    if d <= 0 or d_right <= 0:
        raise ValueError("prices must be positive")
    if assigned == 0:
        return Fraction(0)
    gap = assigned - acquired_initial
    share = d_right / (d + d_right)
    return max(Fraction(0), (gap - share * abs(gap)) / assigned)


def acquired_with_initial_money(trace: Sequence[dict], buyer: int, budget: Fraction) -> int:
    """Couples still held at the end whose Good was paid from the buyer's own Money.

    Walks the purchases in execution order; each Couple the buyer acquired
    from someone else carries a Good cost ``paid * p / (p + q)``. The count is
    the longest prefix of still-held Couples whose cumulative Good cost fits
    in ``budget``.
    """
    held: dict[int, Fraction] = {}
    for ev in trace:
        kind = ev["kind"]
        if kind not in ("couple_formed", "outbid_purchase"):
            continue
        cid = ev["couple"]
        if kind == "outbid_purchase" and ev["from"] == buyer and ev["buyer"] != buyer:
            held.pop(cid, None)
            continue
        if ev["buyer"] != buyer or (kind == "outbid_purchase" and ev["from"] == buyer):
            continue
        held[cid] = Fraction(ev["paid"]) * Fraction(ev["p"]) / (Fraction(ev["p"]) + Fraction(ev["q"]))
    count, spent = 0, Fraction(0)
    for cost in held.values():
        spent += cost
        if spent > budget:
            break
        count += 1
    return count


def market_frustration_report(m: MarketSpec, s: Solution, trace: Sequence[dict] | None = None
                              ) -> list[FrustrationRecord]:
    """One record per buyer.

    Potential frustration needs the trace to tell which Good was bought with
    the buyer's own Money; without it ``pf`` is left as None.
    """
    if trace is None:
        warnings.warn("no trace given: potential frustration is omitted", stacklevel=2)
    d, d_right = s.price_good, s.price_right
    out = []
    for b in m.buyers:
        assigned = b.rights or 0
        got = s.baskets[b.id].good
        initial = pf = None
        if trace is not None:
            initial = acquired_with_initial_money(trace, b.id, b.spend_cap)
            pf = potential_frustration(assigned, initial, d, d_right)
            if d == d_right and pf > Fraction(1, 2):
                raise AssertionError(f"buyer {b.id}: potential frustration {pf} above 1/2 at equal prices")
        out.append(FrustrationRecord(b.id, assigned, got, initial, d, d_right, frustration(assigned, got), pf))
    return out
