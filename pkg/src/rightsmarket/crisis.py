"""Multi-round crisis with myopic traders.

Supply, claims and utilities stay fixed. Rights are redistributed each round
by the same rule, so every buyer receives the same rights every round. What
moves between rounds is willingness: the Money a buyer is prepared to spend
grows by what it earned selling rights in the previous round. In restricted
mode those proceeds cannot be spent in the round that produced them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from rightsmarket.auction import InvalidEndowments, SolveStats, solve
from rightsmarket.frustration import frustration
from rightsmarket.market import Basket, MarketSpec, Mode, check_valid_endowments


class CrisisError(RuntimeError):
    def __init__(self, tau: int, cause: Exception):
        super().__init__(f"round {tau}: {cause}")
        self.tau = tau
        self.cause = cause


@dataclass(frozen=True)
class CrisisSpec:
    template: MarketSpec
    rounds: int
    mode: Mode = Mode.RESTRICTED
    mechanism: str | None = None

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("a crisis needs at least one round")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass
class CrisisRoundRecord:
    tau: int
    price_good: Fraction
    price_right: Fraction
    baskets: dict[int, Basket]
    assigned: dict[int, int]
    rights_sold: dict[int, int]
    rights_proceeds: dict[int, Fraction]
    willingness: dict[int, Fraction]
    frustration: dict[int, Fraction]
    stats: SolveStats | None = field(default=None, repr=False)

    @property
    def price_couple(self) -> Fraction:
        return self.price_good + self.price_right


def iter_crisis(spec: CrisisSpec) -> Iterator[CrisisRoundRecord]:
    """Yield one record per round as soon as the round is solved."""
    from dataclasses import replace

    template = replace(spec.template, mode=spec.mode,
                       mechanism=spec.mechanism or spec.template.mechanism)
    template = template.with_rights(template.mechanism)
    will = {b.id: b.willingness if b.willingness is not None else b.money for b in template.buyers}
    for tau in range(1, spec.rounds + 1):
        market = template.with_willingness(will)
        report = check_valid_endowments(market)
        if not report.ok:
            raise CrisisError(tau, InvalidEndowments(report))
        try:
            res = solve(market)
        except Exception as exc:
            raise CrisisError(tau, exc) from exc
        sol = res.solution
        q = sol.price_right
        assigned = {b.id: b.rights for b in market.buyers}
        sold = {b: max(0, assigned[b] - sol.baskets[b].rights) for b in assigned}
        proceeds = {b: q * n for b, n in sold.items()}
        yield CrisisRoundRecord(
            tau=tau,
            price_good=sol.price_good,
            price_right=q,
            baskets=dict(sol.baskets),
            assigned=assigned,
            rights_sold=sold,
            rights_proceeds=proceeds,
            willingness=dict(will),
            frustration={b: frustration(assigned[b], sol.baskets[b].good) for b in assigned},
            stats=res.stats,
        )
        will = {b: will[b] + proceeds[b] for b in will}


def run_crisis(spec: CrisisSpec) -> list[CrisisRoundRecord]:
    return list(iter_crisis(spec))


@dataclass(frozen=True)
class Violation:
    tau: int
    buyer: int | None
    clause: str
    detail: str


def check_theorem3(records: Sequence[CrisisRoundRecord]) -> list[Violation]:
    """Check the crisis frustration guarantees on a run.

    Clauses: ``cap`` (from the second round on no buyer is more than half
    frustrated), ``monotone`` (no buyer's frustration ever rises) and
    ``price_doubling`` (the Couple price at most doubles between rounds).
    """
    out = []
    half = Fraction(1, 2)
    for rec in records:
        if rec.tau >= 2:
            for b, f in sorted(rec.frustration.items()):
                if f > half:
                    out.append(Violation(rec.tau, b, "cap", f"frustration {f} exceeds 1/2"))
    for prev, cur in zip(records, records[1:]):
        for b, f in sorted(cur.frustration.items()):
            if f > prev.frustration[b]:
                out.append(Violation(cur.tau, b, "monotone",
                                     f"frustration rose from {prev.frustration[b]} to {f}"))
        if cur.price_couple > 2 * prev.price_couple:
            out.append(Violation(cur.tau, None, "price_doubling",
                                 f"Couple price {cur.price_couple} more than doubles {prev.price_couple}"))
    return out
