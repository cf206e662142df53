"""Characters of the tail algebra over one stabilizing sequence, and product states.

A character is fixed by a point sequence x and a tail weight q in (0, 1]:

    gamma(x, q)(L_1 (x) L_2 (x) ...) = lim_n L_1(x_1) ... L_n(x_n) * q^ell

for an elementary tensor whose tail is f^ell.  Points whose tail products
collapse to zero form the exceptional set; there the character degenerates
to 0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import BaseMismatchError
from .fnalg import bump_power
from .infprod import Bracket, integral_tail
from .measures import Measure1D, ProductMeasure, draw_point
from .tensor import ElemTensor, PeriodicLevels, StabSeq, TailClass, TensorElem

DIVERGENCE = 50.0
CONVERGENCE_TOL = 1e-12


# ---------------------------------------------------------------------------
# point sequences


@dataclass(frozen=True)
class InPlateau:
    """x_n = value for every undeviated n; |value| <= 1 keeps x_n on every plateau."""

    value: float = 0.0

    def __post_init__(self):
        if abs(self.value) > 1:
            raise ValueError("plateau tail value must satisfy |value| <= 1")

    def at(self, n: int) -> float:
        return self.value


@dataclass(frozen=True)
class Constant:
    c: float

    def at(self, n: int) -> float:
        return self.c


@dataclass(frozen=True)
class Sampled:
    """x_n drawn from the n-th coordinate of ``measure`` with a fixed seed."""

    measure: ProductMeasure
    seed: int = 0

    def at(self, n: int) -> float:
        return _draw(self.measure[n], self.seed, n)


@dataclass(frozen=True)
class RampOffset:
    """x_n = k_n + offset, with k_n the levels of ``seq``."""

    seq: StabSeq
    offset: float

    def at(self, n: int) -> float:
        return self.seq.level(n) + self.offset


def _draw(mu: Measure1D, seed: int, n: int) -> float:
    return draw_point(mu, seed, n)


@dataclass(frozen=True)
class PointSeq:
    deviations: tuple = ()
    tail: object = field(default_factory=InPlateau)

    def __post_init__(self):
        items = self.deviations.items() if isinstance(self.deviations, Mapping) else self.deviations
        object.__setattr__(self, "deviations", tuple(sorted((int(n), float(v)) for n, v in items)))

    def __getitem__(self, n: int) -> float:
        for m, v in self.deviations:
            if m == n:
                return v
        return self.tail.at(n)

    def values(self, depth: int) -> np.ndarray:
        return np.array([self[n] for n in range(1, depth + 1)])

    @property
    def last_deviation(self) -> int:
        return self.deviations[-1][0] if self.deviations else 0


# ---------------------------------------------------------------------------
# tail product verdicts


@dataclass(frozen=True)
class Limit:
    value: float
    lower: float
    upper: float
    exact: bool = False


@dataclass(frozen=True)
class InNf:
    deficit: float


@dataclass(frozen=True)
class Undetermined:
    partial: float
    deficit: float


def _factor(f: StabSeq | TailClass, ell: int, x: float, n: int) -> float:
    if isinstance(f, TailClass):
        return float(f.slot(n)(x).real) ** ell
    return float(f.slot(n, ell)(x).real)


def tail_product(x: PointSeq, f: StabSeq, ell: int = 1, start: int = 1, depth: int = 256,
                 tol: float = CONVERGENCE_TOL, skip: Iterable[int] = ()):
    """Verdict on prod_{j >= start, j not in skip} f_j(x_j)^ell.

    ``f`` may also be a tail class, whose slot functions are used directly.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    skip = frozenset(skip)
    tail = x.tail
    first_free = max(start, x.last_deviation + 1)
    head = 1.0
    for n in range(start, first_free):
        if n not in skip:
            head *= _factor(f, ell, x[n], n)
    if isinstance(tail, InPlateau):
        # plateau points give factor 1 at every undeviated slot
        return Limit(head, head, head, exact=True)
    rule = getattr(f, "rule", None)
    if isinstance(rule, PeriodicLevels) and isinstance(tail, Constant):
        p0 = max(rule.periodic_start, first_free)
        for n in range(first_free, p0):
            if n not in skip:
                head *= _factor(f, ell, tail.c, n)
        block = [_factor(f, ell, tail.c, n) for n in range(p0, p0 + len(rule.period))]
        if all(v == 1.0 for v in block):
            return Limit(head, head, head, exact=True)
        return InNf(math.inf)
    if isinstance(tail, RampOffset) and tail.seq == f and tail.offset >= 0:
        r = max(0.0, 1.0 - tail.offset) ** ell
        if r == 1.0:
            return Limit(head, head, head, exact=True)
        return InNf(math.inf)
    # numeric path
    partial = head
    deficits = []
    for n in range(first_free, first_free + depth):
        if n in skip:
            continue
        v = _factor(f, ell, x[n], n)
        partial *= v
        deficits.append(1.0 - v)
        if sum(deficits) > DIVERGENCE:
            return InNf(sum(deficits))
    total = float(sum(deficits))
    if partial == 0.0:
        return Limit(0.0, 0.0, 0.0, exact=True)
    rest = _geometric_tail(deficits)
    if rest is not None and rest < tol:
        return Limit(partial, partial * max(0.0, 1.0 - rest), partial)
    return Undetermined(partial, total)


def _geometric_tail(deficits: Sequence[float]) -> float | None:
    """Estimated sum of the unseen deficits under a geometric envelope, or None."""
    L = min(16, len(deficits) // 2)
    if L < 2:
        return None
    window = np.asarray(deficits[-2 * L:])
    first, second = float(np.max(window[:L])), float(np.max(window[L:]))
    if second == 0.0:
        return 0.0
    if first == 0.0 or second >= first:
        return None
    rho = (second / first) ** (1.0 / L)
    return second * rho / (1.0 - rho)


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class Character:
    point: PointSeq
    q: float
    base: StabSeq

    def __post_init__(self):
        object.__setattr__(self, "q", float(self.q))
        if not (0.0 < self.q <= 1.0):
            raise ValueError("q must lie in (0,1]")


def _term_value(c: Character, t: ElemTensor, depth: int, tol: float):
    ell = t.tail.power_of(c.base)
    if ell is None:
        raise BaseMismatchError(f"tail {t.tail!r} is not a power of {c.base.id!r}")
    v = t.coeff
    for n, d in t.devs:
        v *= d(c.point[n])
    if ell == 0:
        return v, None
    verdict = tail_product(c.point, c.base, ell, 1, depth, tol, skip=t.support)
    if isinstance(verdict, InNf):
        return 0j, verdict
    if isinstance(verdict, Undetermined):
        return v * verdict.partial * c.q ** ell, verdict
    return v * verdict.value * c.q ** ell, verdict


def char_eval(c: Character, a: TensorElem, depth: int = 256, tol: float = CONVERGENCE_TOL) -> complex:
    """gamma(x, q)(a); exact for plateau point sequences."""
    total = 0j
    for t in a.terms:
        v, verdict = _term_value(c, t, depth, tol)
        if isinstance(verdict, InNf):
            warnings.warn("point lies in the exceptional set; character evaluates to 0", RuntimeWarning,
                          stacklevel=2)
        elif isinstance(verdict, Undetermined):
            warnings.warn("tail product undetermined at this depth; partial value used", RuntimeWarning,
                          stacklevel=2)
        total += v
    return total


def char_sup_lower(a: TensorElem, chars: Iterable[Character]) -> float:
    """max |gamma(a)| over the given characters: a lower bound for the norm of a."""
    best = 0.0
    for c in chars:
        best = max(best, abs(char_eval(c, a)))
    return best


def q_grid_characters(base: StabSeq, count: int = 1000, point: PointSeq | None = None) -> list[Character]:
    point = point or PointSeq()
    return [Character(point, q, base) for q in np.linspace(1.0 / count, 1.0, count)]


def char_eval_batch(samples: np.ndarray, base: StabSeq, a: TensorElem, q: float = 1.0) -> np.ndarray:
    """gamma(y, q)(a) for every row y of ``samples``, tails truncated at the sample depth."""
    M, N = samples.shape
    out = np.zeros(M, dtype=np.complex128)
    for t in a.terms:
        ell = t.tail.power_of(base)
        if ell is None:
            raise BaseMismatchError(f"tail {t.tail!r} is not a power of {base.id!r}")
        if t.support and t.support[-1] > N:
            raise ValueError("deviation beyond sample depth")
        v = np.full(M, t.coeff, dtype=np.complex128)
        dev = dict(t.devs)
        for n in range(1, N + 1):
            if n in dev:
                v *= dev[n](samples[:, n - 1])
            elif ell:
                v *= base.slot(n, ell)(samples[:, n - 1]).real
        out += v * (q ** ell)
    return out


# ---------------------------------------------------------------------------
# product states


@dataclass(frozen=True)
class ProductState:
    measure: ProductMeasure

    def __call__(self, x) -> complex:
        return state_eval(self, x)


def _support(x) -> list[tuple[int, float]]:
    if isinstance(x, Mapping):
        return [(int(n), float(v)) for n, v in sorted(x.items()) if v != 0]
    return [(n, float(v)) for n, v in enumerate(np.ravel(x), start=1) if v != 0]


def state_eval(s: ProductState, x) -> complex:
    """omega(x) = prod_n char_fn(mu_n, x_n) over the support of x."""
    v = 1.0 + 0j
    for n, xn in _support(x):
        v *= s.measure[n].char_fn(xn)
    return v


@dataclass(frozen=True)
class StrictExtResult:
    residual: float
    approx: Bracket
    exact: complex


def strict_ext_check(s: ProductState, f: StabSeq, x, depth: int, tail_depth: int = 64) -> StrictExtResult:
    """|<Omega, eta(x) E_N Omega> - omega(x)| for the approximate identity E_N built from f.

    E_N carries bump(k_j + N) on slots j <= N and f_j beyond; slots in the
    support of x are modulated.
    """
    mu = s.measure
    supp = dict(_support(x))
    head_end = max([depth] + list(supp))
    val = 1.0 + 0j
    for j in range(1, head_end + 1):
        g = bump_power(f.level(j) + depth, 1) if j <= depth else f.slot(j)
        if j in supp:
            g = g.modulate(supp[j])
        val *= mu[j].integrate(g).value
    tail = integral_tail(f, mu, head_end + 1, tail_depth).bracket
    approx = tail * val
    exact = state_eval(s, x)
    res = abs(approx.value - exact)
    return StrictExtResult(float(res), approx, exact)


def psd_check(omega: Callable, points: Sequence) -> float:
    """Smallest eigenvalue of the Hermitian Gram matrix [omega(x_i - x_j)]."""
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    if not pts:
        raise ValueError("need at least one point")
    width = max(p.size for p in pts)
    pts = [np.pad(p, (0, width - p.size)) for p in pts]
    m = len(pts)
    G = np.empty((m, m), dtype=np.complex128)
    for i in range(m):
        for j in range(i, m):
            v = complex(omega(pts[i] - pts[j]))
            G[i, j] = v
            G[j, i] = v.conjugate()
    G = 0.5 * (G + G.conj().T)
    return float(np.linalg.eigvalsh(G)[0])


def cosine_non_state(x) -> complex:
    """1.5 * prod cos(2 x_n) - 0.5: normalized at 0 but not positive definite."""
    return 1.5 * float(np.prod(np.cos(2.0 * np.asarray(x, dtype=np.float64)))) - 0.5


NON_STATE_POINTS = ([0.0], [math.pi / 2])


def mc_state(samples: np.ndarray, x) -> complex:
    """Monte Carlo mean of exp(i <x, Y>) over rows Y."""
    supp = _support(x)
    if not supp:
        return 1.0 + 0j
    idx = np.array([n - 1 for n, _ in supp], dtype=np.int64)
    val = np.array([v for _, v in supp], dtype=np.float64)
    re, im = kernels.mc_char_mean(np.ascontiguousarray(samples), idx, val)
    return complex(re, im)


__all__ = [
    "InPlateau", "Constant", "Sampled", "RampOffset", "PointSeq", "Limit", "InNf", "Undetermined",
    "tail_product", "Character", "char_eval", "char_sup_lower", "q_grid_characters", "char_eval_batch",
    "ProductState", "state_eval", "strict_ext_check", "StrictExtResult", "psd_check",
    "cosine_non_state", "NON_STATE_POINTS", "mc_state",
]
