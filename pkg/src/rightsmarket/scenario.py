"""Scenario documents and random instance generation."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from rightsmarket.codec import ParseError, fmt, parse_rational, spec_from_dict, spec_to_dict
from rightsmarket.market import (Buyer, GoodUtility, MarketSpec, Mode, MoneyUtility, Seller,
                                 check_valid_endowments)
from rightsmarket.rights import distribute

KINDS = ("market", "crisis")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    kind: str
    market: MarketSpec
    rounds: int = 1
    seed: int = 0
    outputs: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.rounds < 1:
            raise ScenarioError("rounds must be at least 1")

    def to_dict(self) -> dict:
        d = spec_to_dict(self.market)
        # Rights are derived from the mechanism; keep documents declarative.
        for b in d["buyers"]:
            b.pop("rights", None)
        d.update(kind=self.kind, rounds=self.rounds, seed=self.seed)
        if self.outputs:
            d["outputs"] = dict(self.outputs)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> Scenario:
        kind = d.get("kind", "market")
        rounds = d.get("rounds", 1)
        seed = d.get("seed", 0)
        for key, v in (("rounds", rounds), ("seed", seed)):
            if isinstance(v, bool) or not isinstance(v, int):
                raise ParseError(key, f"expected an integer, got {v!r}")
        market = spec_from_dict(d)
        try:
            return cls(kind=kind, market=market, rounds=rounds, seed=seed,
                       outputs=dict(d.get("outputs", {})))
        except ScenarioError as exc:
            raise ParseError("kind" if "kind" in str(exc) else "rounds", str(exc)) from None


def load_scenario(path: str | Path, validate: bool = True) -> Scenario:
    """Read and validate a scenario JSON file.

    Raises :class:`ParseError` for malformed content and
    :class:`rightsmarket.auction.InvalidEndowments` when an endowment breaks
    a validity clause.
    """
    from rightsmarket.auction import InvalidEndowments

    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}", exc.msg) from None
    if not isinstance(doc, dict):
        raise ParseError("document", "expected a JSON object")
    sc = Scenario.from_dict(doc)
    if validate:
        report = check_valid_endowments(sc.market)
        if not report.ok:
            raise InvalidEndowments(report)
    return sc


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sc.to_dict(), indent=2, sort_keys=True) + "\n")


def _draw_marginals(rng: random.Random, alpha: Fraction, claim: int, rights: int) -> tuple[Fraction, ...]:
    # The top `rights` values beat 2*alpha strictly; sorting keeps them on top.
    high = [alpha * (2 + Fraction(rng.randint(1, 40), 4)) for _ in range(rights)]
    rest = [alpha * Fraction(rng.randint(2, 60), 4) for _ in range(claim - rights)]
    return tuple(sorted(high + rest, reverse=True))


def generate_instance(seed: int, buyers: int, sellers: int, vmax: int, dmax: int | None = None,
                      epsilon: Fraction | str = Fraction(1, 10), mode: Mode | str = Mode.UNRESTRICTED,
                      mechanism: str = "proportional") -> MarketSpec:
    """Random market whose endowments are valid by construction.

    The offered volume lies in ``[2, vmax]`` and never exceeds the total
    claim, so every Right is issued.
    """
    if buyers < 1 or sellers < 1 or vmax < 1:
        raise ScenarioError("buyers, sellers and vmax must be positive")
    dmax = vmax if dmax is None else dmax
    if dmax < 1:
        raise ScenarioError("dmax must be positive")
    rng = random.Random(seed)
    claims = [rng.randint(1, dmax) for _ in range(buyers)]
    if sum(claims) < 2 <= vmax:
        claims[0] += 1
    top = min(vmax, sum(claims))
    volume = rng.randint(min(2, top), top)
    cuts = sorted(rng.randint(0, volume) for _ in range(sellers - 1))
    goods = [b - a for a, b in zip([0] + cuts, cuts + [volume])]
    rights = distribute(mechanism, volume, claims)
    buyer_objs = []
    for i, (d, r) in enumerate(zip(claims, rights)):
        alpha = Fraction(rng.choice([1, 1, 2, 3]), rng.choice([1, 2]))
        marg = _draw_marginals(rng, alpha, d, r)
        total = sum(marg)
        money = max(4 * r, 2 * total / alpha) + Fraction(rng.randint(1, 40), 4)
        buyer_objs.append(Buyer(id=i, money=money, good_utility=GoodUtility(marg),
                                money_utility=MoneyUtility(alpha), rights=r))
    seller_objs = [Seller(id=buyers + j, good=g) for j, g in enumerate(goods)]
    spec = MarketSpec(tuple(seller_objs), tuple(buyer_objs), Fraction(epsilon), Mode(mode), mechanism)
    assert check_valid_endowments(spec).ok
    return spec


def generate_crisis_template(seed: int, rich: int = 2, poor: int = 2,
                             epsilon: Fraction | str = Fraction(1, 10),
                             mechanism: str = "proportional") -> MarketSpec:
    """Market template for a rich/poor restricted crisis.

    Claims are oversubscribed (total claim about twice the supply). Every
    buyer carries a spending cap and values each item of Good far above any
    price the caps can support, so spending is set by willingness alone.
    Rich buyers can pay several times the opening price for each of their
    rights; poor buyers can cover between one and all of their rights at the
    opening price.
    """
    rng = random.Random(seed)
    n = rich + poor
    claims = [rng.randint(5, 9) if i < rich else rng.randint(2, 5) for i in range(n)]
    volume = max(2, sum(claims) // 2)
    rights = distribute(mechanism, volume, claims)
    buyers = []
    for i, (d, r) in enumerate(zip(claims, rights)):
        top = Fraction(rng.randint(5000, 6000))
        marg = tuple(sorted((top - rng.randint(0, 500) for _ in range(d)), reverse=True))
        money = max(4 * r, 2 * sum(marg)) + rng.randint(1, 10)
        if i < rich:
            will = Fraction(max(1, r) * rng.randint(4, 8))
        else:
            will = Fraction(rng.randint(1, max(1, r)))
        buyers.append(Buyer(id=i, money=money, good_utility=GoodUtility(marg), rights=r, willingness=will))
    cut = rng.randint(1, volume - 1)
    sellers = [Seller(id=n, good=cut), Seller(id=n + 1, good=volume - cut)]
    return MarketSpec(tuple(sellers), tuple(buyers), Fraction(epsilon), Mode.RESTRICTED, mechanism)
