"""Certified infinite products of one-dimensional integrals.

The central object is ``prod_{j >= start} int f_j^ell d mu_j`` for a
stabilizing sequence f and a product measure mu.  Every factor lies in
[0, 1].  Three situations are decided exactly or with a rigorous bracket:

* levels and measures eventually periodic: the product over one joint period
  is either exactly 1 (no mass outside the plateaus) or < 1, and then the
  infinite product is exactly 0;
* levels selected against mu itself with a summable budget: each deficit is
  at most budget(j), so the unseen tail lies in [1 - sum_{j>N} budget(j), 1];
* anything else: the partial product is an upper bound and 0 the lower one,
  reported as undetermined unless the deficit sum already exceeds the
  divergence threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .measures import ProductMeasure
from .tensor import PeriodicLevels, SelectedLevels, StabSeq, TailClass

DIVERGENCE = 50.0


class Bracket(NamedTuple):
    """value +- radius; ``determined`` is False when the radius is not a proof."""

    value: complex
    radius: float
    determined: bool = True

    @classmethod
    def exact(cls, v: complex) -> "Bracket":
        return cls(complex(v), 0.0, True)

    @classmethod
    def interval(cls, lo: float, hi: float, determined: bool = True) -> "Bracket":
        return cls(complex(0.5 * (lo + hi)), 0.5 * (hi - lo), determined)

    @property
    def lower(self) -> float:
        return self.value.real - self.radius

    @property
    def upper(self) -> float:
        return self.value.real + self.radius

    def __mul__(self, other) -> "Bracket":
        if not isinstance(other, Bracket):
            c = complex(other)
            return Bracket(self.value * c, self.radius * abs(c), self.determined)
        a, b = self.value, other.value
        r = abs(a) * other.radius + abs(b) * self.radius + self.radius * other.radius
        return Bracket(a * b, r, self.determined and other.determined)

    __rmul__ = __mul__

    def __add__(self, other) -> "Bracket":
        if not isinstance(other, Bracket):
            return Bracket(self.value + complex(other), self.radius, self.determined)
        return Bracket(self.value + other.value, self.radius + other.radius,
                       self.determined and other.determined)

    __radd__ = __add__

    def __neg__(self) -> "Bracket":
        return Bracket(-self.value, self.radius, self.determined)

    def __sub__(self, other) -> "Bracket":
        return self + (-other)

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return abs(complex(z) - self.value) <= self.radius + slack

    def hull(self, other: "Bracket") -> "Bracket":
        """Smallest disc-centred bracket containing both (real-axis hull for real values)."""
        lo = min(self.lower, other.lower)
        hi = max(self.upper, other.upper)
        im = 0.5 * (self.value.imag + other.value.imag)
        rad = max(0.5 * (hi - lo), abs(self.value.imag - im) + self.radius, abs(other.value.imag - im) + other.radius)
        return Bracket(complex(0.5 * (lo + hi), im), rad, self.determined and other.determined)


ONE_BRACKET = Bracket.exact(1.0)


@dataclass(frozen=True)
class TailReport:
    """Outcome of an infinite-product analysis."""

    bracket: Bracket
    kind: str  # "one", "zero", "summable", "divergent", "unknown"
    partial: float
    depth: int


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def slot_integral(tail: TailClass, mu: ProductMeasure, j: int) -> float:
    lv = [(s.level(j), e) for s, e in tail]
    kmin = min(k for k, _ in lv)
    return mu[j].bump_integral(kmin, sum(e for k, e in lv if k == kmin))


def integral_tail(tail: TailClass | StabSeq, mu: ProductMeasure, start: int = 1, depth: int = 64,
                  skip: frozenset = frozenset(), ell: int = 1) -> TailReport:
    """Bracket for prod_{j >= start, j not in skip} int tail_j d mu_j.

    A bare StabSeq is read as the class seq^ell.  Every tail slot is bounded
    above by each factor's own slot, so one periodic factor carrying mass
    outside its plateaus forces the product to 0.
    """
    if isinstance(tail, StabSeq):
        tail = TailClass([(tail, ell)])
    if tail.is_unit:
        return TailReport(ONE_BRACKET, "one", 1.0, 0)
    periodic = [(s, e) for s, e in tail if isinstance(s.rule, PeriodicLevels)]
    others = [(s, e) for s, e in tail if not isinstance(s.rule, PeriodicLevels)]
    p0 = max([mu.periodic_start, start] + [s.rule.periodic_start for s, _ in periodic])
    per = _lcm([len(mu.period)] + [len(s.rule.period) for s, _ in periodic])
    for s, _ in periodic:
        if any(mu[j].deficit(s.level(j)) > 0.0 for j in range(p0, p0 + per)):
            return TailReport(Bracket.exact(0.0), "zero", 0.0, p0)
    if not others:
        head = 1.0
        for j in range(start, p0):
            if j not in skip:
                head *= slot_integral(tail, mu, j)
        # every factor beyond p0 is exactly one
        return TailReport(Bracket.exact(head), "one", head, p0)
    partial = 1.0
    deficit = 0.0
    last = max(start + depth - 1, p0)
    for j in range(start, last + 1):
        if j in skip:
            continue
        a = slot_integral(tail, mu, j)
        partial *= a
        deficit += 1.0 - a
    if all(isinstance(s.rule, SelectedLevels) and s.rule.measure == mu for s, _ in others):
        rest = sum(s.rule.budget.tail(last) for s, _ in others)
        return TailReport(Bracket.interval(partial * max(0.0, 1.0 - rest), partial), "summable", partial, last)
    if deficit > DIVERGENCE:
        return TailReport(Bracket.interval(0.0, partial), "divergent", partial, last)
    return TailReport(Bracket.interval(0.0, partial, determined=False), "unknown", partial, last)
