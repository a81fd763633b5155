"""Rights distribution rules.

Each rule splits an offered volume ``V`` of indivisible Right among buyers
according to their integer claims. When the claims add up to less than the
volume every buyer simply receives its claim and the surplus is not issued.
Ties are always broken towards the lowest buyer index.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence


@dataclass(frozen=True)
class ClaimsProblem:
    volume: int
    claims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "claims", tuple(int(d) for d in self.claims))
        if self.volume < 1:
            raise ValueError("volume must be positive")
        if any(d < 0 for d in self.claims):
            raise ValueError("claims must be non-negative")
        if not any(self.claims):
            raise ValueError("at least one claim must be positive")

    @property
    def oversubscribed(self) -> bool:
        return sum(self.claims) >= self.volume


def _undersubscribed(p: ClaimsProblem) -> tuple[int, ...] | None:
    return None if p.oversubscribed else p.claims


def proportional(p: ClaimsProblem) -> tuple[int, ...]:
    """Hamilton apportionment: floors of the quotas, then largest remainders."""
    if (short := _undersubscribed(p)) is not None:
        return short
    total = sum(p.claims)
    quotas = [Fraction(p.volume * d, total) for d in p.claims]
    alloc = [int(qt) for qt in quotas]
    left = p.volume - sum(alloc)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in order[:left]:
        alloc[i] += 1
    return tuple(alloc)


def constrained_equal_awards(p: ClaimsProblem) -> tuple[int, ...]:
    """Water-fill to the highest common level, then one extra unit each to the largest claims."""
    if (short := _undersubscribed(p)) is not None:
        return short
    level, top = 0, max(p.claims)
    while level < top and sum(min(d, level + 1) for d in p.claims) <= p.volume:
        level += 1
    alloc = [min(d, level) for d in p.claims]
    left = p.volume - sum(alloc)
    # Leftover units favour larger claims so awards never reverse claim order.
    for i in sorted(range(len(p.claims)), key=lambda i: (-p.claims[i], i)):
        if left == 0:
            break
        if p.claims[i] > level:
            alloc[i] += 1
            left -= 1
    return tuple(alloc)


def constrained_equal_losses(p: ClaimsProblem) -> tuple[int, ...]:
    """Cut every claim by the smallest common loss that fits, then hand back leftovers."""
    if (short := _undersubscribed(p)) is not None:
        return short
    loss = 0
    while sum(max(0, d - loss) for d in p.claims) > p.volume:
        loss += 1
    alloc = [max(0, d - loss) for d in p.claims]
    left = p.volume - sum(alloc)
    for i, d in enumerate(p.claims):
        if left == 0:
            break
        if d >= loss and alloc[i] < d:
            alloc[i] += 1
            left -= 1
    return tuple(alloc)


def uniform(p: ClaimsProblem) -> tuple[int, ...]:
    """Round-robin single units over buyers with unmet claims."""
    if (short := _undersubscribed(p)) is not None:
        return short
    alloc = [0] * len(p.claims)
    left = p.volume
    while left:
        for i, d in enumerate(p.claims):
            if left and alloc[i] < d:
                alloc[i] += 1
                left -= 1
    return tuple(alloc)


MECHANISMS: dict[str, Callable[[ClaimsProblem], tuple[int, ...]]] = {
    "proportional": proportional,
    "cea": constrained_equal_awards,
    "cel": constrained_equal_losses,
    "uniform": uniform,
}


def distribute(mechanism: str, volume: int, claims: Sequence[int]) -> tuple[int, ...]:
    try:
        rule = MECHANISMS[mechanism]
    except KeyError:
        raise ValueError(f"unknown rights mechanism {mechanism!r}; "
                         f"choose from {sorted(MECHANISMS)}") from None
    return rule(ClaimsProblem(volume, tuple(claims)))
