"""JSON-friendly encoding of rationals, markets and solutions.

Rationals travel as ``"num/den"`` strings (or plain integers) so documents
round-trip without loss.
"""

from __future__ import annotations

import json
import numbers
import re
from fractions import Fraction
from typing import Any, Mapping

from rightsmarket.market import (Basket, Buyer, GoodUtility, MarketError, MarketSpec, Mode,
                                 MoneyUtility, Seller, Solution)

_RATIONAL = re.compile(r"^\s*-?\d+\s*(/\s*\d+\s*)?$")


class ParseError(ValueError):
    """Malformed document; ``where`` names the offending field."""

    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


def parse_rational(value: Any, where: str = "value") -> Fraction:
    if isinstance(value, bool):
        raise ParseError(where, f"expected a rational, got {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str) and _RATIONAL.match(value):
        num, _, den = value.replace(" ", "").partition("/")
        if den and int(den) == 0:
            raise ParseError(where, f"zero denominator in {value!r}")
        return Fraction(int(num), int(den) if den else 1)
    raise ParseError(where, f"expected an integer or 'num/den' string, got {value!r}")


def fmt(x: Fraction | int) -> str | int:
    if isinstance(x, int):
        return x
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def encode(obj: Any) -> Any:
    """Recursively replace Fractions by strings; tuples become lists."""
    if isinstance(obj, numbers.Rational) and not isinstance(obj, int):
        return str(Fraction(obj))
    if isinstance(obj, Mode):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    return obj


def decode(obj: Any) -> Any:
    """Inverse of :func:`encode` for trace events: rational strings become Fractions."""
    if isinstance(obj, str) and _RATIONAL.match(obj):
        return parse_rational(obj)
    if isinstance(obj, dict):
        return {k: decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode(v) for v in obj]
    return obj


def dumps_line(obj: Any) -> str:
    return json.dumps(encode(obj), sort_keys=True, separators=(",", ":"))


def spec_to_dict(m: MarketSpec) -> dict:
    return {
        "sellers": [{"id": s.id, "good": s.good} for s in m.sellers],
        "buyers": [
            {
                "id": b.id,
                "money": fmt(b.money),
                "claim": b.claim,
                "alpha": fmt(b.alpha),
                "marginals": [fmt(v) for v in b.good_utility.marginals],
                **({"rights": b.rights} if b.rights is not None else {}),
                **({"willingness": fmt(b.willingness)} if b.willingness is not None else {}),
            }
            for b in m.buyers
        ],
        "epsilon": fmt(m.epsilon),
        "mode": m.mode.value,
        "mechanism": m.mechanism,
    }


def _int_field(d: Mapping, key: str, where: str, default: Any = None) -> int:
    v = d.get(key, default)
    if v is None:
        raise ParseError(f"{where}.{key}", "missing field")
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{where}.{key}", f"expected an integer, got {v!r}")
    return v


def spec_from_dict(d: Mapping, assign_rights: bool = True) -> MarketSpec:
    """Build a market from a document; ids default to buyers first, then sellers."""
    try:
        raw_buyers = d["buyers"]
        raw_sellers = d["sellers"]
    except KeyError as exc:
        raise ParseError(exc.args[0], "missing field") from None
    if not isinstance(raw_buyers, list) or not raw_buyers:
        raise ParseError("buyers", "expected a non-empty list")
    if not isinstance(raw_sellers, list) or not raw_sellers:
        raise ParseError("sellers", "expected a non-empty list")
    buyers = []
    for i, rb in enumerate(raw_buyers):
        where = f"buyers[{i}]"
        if "marginals" not in rb:
            raise ParseError(f"{where}.marginals", "missing field")
        marg = tuple(parse_rational(v, f"{where}.marginals[{j}]") for j, v in enumerate(rb["marginals"]))
        if "claim" in rb and _int_field(rb, "claim", where) != len(marg):
            raise ParseError(f"{where}.claim", "claim must equal the number of marginals")
        if "money" not in rb:
            raise ParseError(f"{where}.money", "missing field")
        will = rb.get("willingness")
        try:
            buyers.append(Buyer(
                id=_int_field(rb, "id", where, i),
                money=parse_rational(rb["money"], f"{where}.money"),
                good_utility=GoodUtility(marg),
                money_utility=MoneyUtility(parse_rational(rb.get("alpha", 1), f"{where}.alpha")),
                rights=rb.get("rights"),
                willingness=None if will is None else parse_rational(will, f"{where}.willingness"),
            ))
        except MarketError as exc:
            raise ParseError(where, str(exc)) from None
    n = len(buyers)
    sellers = []
    for j, rs in enumerate(raw_sellers):
        where = f"sellers[{j}]"
        try:
            sellers.append(Seller(id=_int_field(rs, "id", where, n + j), good=_int_field(rs, "good", where)))
        except MarketError as exc:
            raise ParseError(where, str(exc)) from None
    if "epsilon" not in d:
        raise ParseError("epsilon", "missing field")
    try:
        spec = MarketSpec(
            sellers=tuple(sellers),
            buyers=tuple(buyers),
            epsilon=parse_rational(d["epsilon"], "epsilon"),
            mode=Mode(d.get("mode", "unrestricted")),
            mechanism=d.get("mechanism", "proportional"),
        )
        if assign_rights and not spec.rights_assigned:
            spec = spec.with_rights()
    except (MarketError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError("market", str(exc)) from None
    return spec


def solution_to_dict(s: Solution) -> dict:
    return {
        "price_good": fmt(s.price_good),
        "price_right": fmt(s.price_right),
        "baskets": [
            {"trader": t, "good": b.good, "rights": b.rights, "money": fmt(b.money)}
            for t, b in sorted(s.baskets.items())
        ],
    }


def solution_from_dict(d: Mapping) -> Solution:
    baskets = {}
    for i, rb in enumerate(d["baskets"]):
        where = f"baskets[{i}]"
        baskets[_int_field(rb, "trader", where)] = Basket(
            good=_int_field(rb, "good", where),
            rights=_int_field(rb, "rights", where),
            money=parse_rational(rb["money"], f"{where}.money"),
        )
    return Solution(
        price_good=parse_rational(d["price_good"], "price_good"),
        price_right=parse_rational(d["price_right"], "price_right"),
        baskets=baskets,
    )
