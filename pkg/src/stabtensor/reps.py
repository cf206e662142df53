"""Matrix elements of diagonal tensor operators in product-measure representations.

Vectors live in the incomplete direct product of L^2(mu_n) stabilized by the
constant functions e_n = 1, so a vector term is a unit-tail elementary
tensor.  Every operator handled here is multiplication by an elementary
tensor, hence applying it is tensor multiplication and an inner product is
the expectation of ``adjoint(u) * op * v``:

    E[c * (x) d_n  (x) tail] = c * prod_n int d_n d mu_n * prod_rest int tail_j d mu_j

The infinite product over the rest is bracketed by :mod:`infprod`.  Nothing
infinite-dimensional is ever materialized.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .chars import Character, InNf, Limit, tail_product
from .errors import BaseMismatchError
from .fnalg import ONE, ScalarFn
from .infprod import Bracket, integral_tail
from .measures import ProductMeasure
from .tensor import UNIT_TAIL, ElemTensor, StabSeq, TailClass, TensorElem, mul


# ---------------------------------------------------------------------------
# vectors


class VecElem:
    """Finite combination of vectors that equal e_n = 1 outside finitely many slots."""

    __slots__ = ("elem", "ambient")

    def __init__(self, terms: Iterable = (), ambient: ProductMeasure | None = None):
        self.ambient = ambient
        self.elem = TensorElem(ElemTensor(UNIT_TAIL, slots, c) for c, slots in terms)

    @classmethod
    def omega(cls, ambient: ProductMeasure) -> "VecElem":
        return cls([(1.0, {})], ambient)

    @classmethod
    def _wrap(cls, elem: TensorElem, ambient) -> "VecElem":
        obj = cls.__new__(cls)
        obj.elem, obj.ambient = elem, ambient
        return obj

    def __add__(self, other: "VecElem") -> "VecElem":
        return VecElem._wrap(self.elem + other.elem, self.ambient)

    def scale(self, lam: complex) -> "VecElem":
        return VecElem._wrap(self.elem.scale(lam), self.ambient)

    def modulate(self, x: Mapping[int, float]) -> "VecElem":
        """Apply eta(x): slot j multiplied by exp(i x_j t).

        Slots touched by x must be C0 functions (no constant part); the
        constant vector e_j = 1 has no compactly supported modulation.
        """
        out = []
        for t in self.elem.terms:
            idx = sorted(set(t.support) | {n for n, v in x.items() if v})
            slots = {n: t.slot(n).modulate(x[n]) if x.get(n) else t.slot(n) for n in idx}
            out.append(ElemTensor(UNIT_TAIL, slots, t.coeff))
        return VecElem._wrap(TensorElem(out), self.ambient)


@dataclass(frozen=True)
class LazyVec:
    """A vector with diagonal operators applied; collapses to a tensor combination."""

    base: VecElem
    applied: tuple = ()

    def apply(self, op: TensorElem | ElemTensor) -> "LazyVec":
        return LazyVec(self.base, self.applied + (op,))

    def collapse(self) -> TensorElem:
        out = self.base.elem
        for op in self.applied:
            out = mul(op if isinstance(op, TensorElem) else TensorElem([op]), out)
        return out

    @property
    def ambient(self):
        return self.base.ambient


def _as_elem(v) -> TensorElem:
    if isinstance(v, VecElem):
        return v.elem
    if isinstance(v, LazyVec):
        return v.collapse()
    return v


_INTEGRAL_CACHE: dict = {}


def _slot_integral(mu: ProductMeasure, n: int, d: ScalarFn) -> Bracket:
    key = (mu[n], d.key())
    hit = _INTEGRAL_CACHE.get(key)
    if hit is None:
        r = mu[n].integrate(d)
        hit = Bracket(r.value, r.error)
        if len(_INTEGRAL_CACHE) < 200000:
            _INTEGRAL_CACHE[key] = hit
    return hit


def expectation(a: TensorElem, mu: ProductMeasure, depth: int = 64) -> Bracket:
    """Vacuum expectation <Omega, pi(a) Omega> with a certified bracket."""
    total = Bracket.exact(0.0)
    for t in a.terms:
        b = Bracket.exact(t.coeff)
        for n, d in t.devs:
            b = b * _slot_integral(mu, n, d)
        b = b * integral_tail(t.tail, mu, 1, depth, skip=frozenset(t.support)).bracket
        total = total + b
    return total


def inner(u, v, mu: ProductMeasure | None = None, depth: int = 64) -> Bracket:
    """<u, v>, antilinear in u."""
    mu = mu or getattr(u, "ambient", None) or getattr(v, "ambient", None)
    if mu is None:
        raise ValueError("no ambient measure given")
    return expectation(mul(_as_elem(u).adjoint(), _as_elem(v)), mu, depth)


def matrix_element(u, op: TensorElem | ElemTensor, v, mu: ProductMeasure | None = None,
                   depth: int = 64) -> Bracket:
    """<u, pi(op) v>."""
    op = op if isinstance(op, TensorElem) else TensorElem([op])
    mu = mu or getattr(u, "ambient", None) or getattr(v, "ambient", None)
    return expectation(mul(_as_elem(u).adjoint(), mul(op, _as_elem(v))), mu, depth)


# ---------------------------------------------------------------------------
# von Neumann equivalence


@dataclass(frozen=True)
class EquivVerdict:
    verdict: str  # "convergent", "divergent", "undetermined"
    partial_sum: float


def vn_equiv(u: ElemTensor, v: ElemTensor, mu: ProductMeasure, depth: int = 64,
             threshold: float = 50.0) -> EquivVerdict:
    """Is sum_t |(u_t, v_t) - 1| finite?  Slot sequences given as elementary tensors."""
    w = u.adjoint() * v
    partial = 0.0
    for n in range(1, depth + 1):
        d = w.slot(n)
        partial += abs(_slot_integral(mu, n, d).value - 1.0)
    rep = integral_tail(w.tail, mu, max(w.support, default=0) + 1, depth)
    if rep.kind in ("one", "summable"):
        return EquivVerdict("convergent", partial)
    if rep.kind in ("zero", "divergent") or partial > threshold:
        return EquivVerdict("divergent", partial)
    return EquivVerdict("undetermined", partial)


# ---------------------------------------------------------------------------
# F, P and the excess operator


def F_operator(k: int, ell: int, f: StabSeq) -> ElemTensor:
    """Multiplication by f_j^ell on slots j >= k and by 1 below k."""
    if k < 1 or ell < 1:
        raise ValueError("k and ell must be >= 1")
    return ElemTensor(TailClass([(f, ell)]), {j: ONE for j in range(1, k)})


def F_elem(k: int, ell: int, f: StabSeq, u, v, depth: int = 64) -> Bracket:
    """<u, F_k^(ell) v> as a bracket around the strong limit."""
    return matrix_element(u, F_operator(k, ell, f), v, depth=depth)


def F_partials(k: int, ell: int, f: StabSeq, u, v, N_values: Iterable[int]) -> list[complex]:
    """<u, prod_{j=k}^N pi_j(f_j^ell) v> for each N (finite products, no tail)."""
    out = []
    for N in N_values:
        op = ElemTensor(UNIT_TAIL, {j: f.slot(j, ell) for j in range(k, N + 1)})
        out.append(matrix_element(u, op, v).value)
    return out


def _limit_factor(f: StabSeq | TailClass, mu: ProductMeasure, start: int, depth: int, ell: int = 1):
    """Limit as k -> infinity of prod_{j >= k} int f_j^ell: 1, 0, or None if unknown."""
    rep = integral_tail(f, mu, start, depth, ell=ell)
    if rep.kind in ("one", "summable"):
        return 1.0, rep
    if rep.kind == "zero":
        return 0.0, rep
    return None, rep


def P_elem(f: StabSeq, u, v, k_max: int = 64, ell: int = 1, depth: int = 64) -> Bracket:
    """<u, P[f] v>, P[f] the strong limit of F_k as k grows; hull of F_{k_max} and the limit."""
    mu = u.ambient or v.ambient
    uv = inner(u, v, mu, depth)
    start = k_max + max([0] + [max(t.support, default=0) for t in _as_elem(u).terms + _as_elem(v).terms])
    lim, _ = _limit_factor(f, mu, start, depth, ell)
    at_kmax = F_elem(k_max, ell, f, u, v, depth)
    if lim is None:
        return Bracket(at_kmax.value, max(at_kmax.radius, abs(at_kmax.value)), False)
    return at_kmax.hull(uv * lim)


def excess_elem(f: StabSeq, rep, u=None, v=None, depth: int = 64, ell: int = 1,
                q: float | None = None) -> Bracket:
    """<u, Q^ell v> for the excess operator Q of the tail units of f.

    For a character the excess is q^ell when the point's tail products do not
    collapse and 0 otherwise.  In a product-measure representation the tail
    units act through F_n, so Q is the projection P[f].
    """
    if isinstance(rep, Character):
        start = rep.point.last_deviation + 1
        verdict = tail_product(rep.point, f, ell, start, 256)
        qq = rep.q if q is None else q
        if isinstance(verdict, Limit):
            return Bracket.exact(qq ** ell)
        if isinstance(verdict, InNf):
            return Bracket.exact(0.0)
        return Bracket.interval(0.0, qq ** ell, determined=False)
    if not isinstance(rep, ProductMeasure):
        raise TypeError("rep must be a Character or a ProductMeasure")
    u = u or VecElem.omega(rep)
    v = v or VecElem.omega(rep)
    val = P_elem(f, u, v, depth, ell, depth)
    return val * ((1.0 if q is None else q) ** ell)


def _window_operator(t: ElemTensor, m: int) -> ElemTensor:
    return ElemTensor(UNIT_TAIL, {j: t.slot(j) for j in range(1, m + 1)})


def piQ_eval(A: TensorElem, base: StabSeq, q: float, u, v, depth: int = 64,
             path: str = "window") -> Bracket:
    """Matrix element <u, pi_Q(A) v> with excess Q = q.

    ``path="window"`` multiplies slots 1..m by the window of A, applies
    F_{m+1}^(ell) and then q^ell.  ``path="limit"`` takes finite products of
    the first N slots of A (N = depth) and brackets the remaining tail
    separately; the two must agree.
    """
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0,1]")
    mu = u.ambient or v.ambient
    total = Bracket.exact(0.0)
    for t in A.terms:
        ell = t.tail.power_of(base)
        if ell is None:
            raise BaseMismatchError(f"tail {t.tail!r} is not a power of {base.id!r}")
        m = max(t.support, default=0)
        if path == "window":
            op = _window_operator(t, m) * F_operator(m + 1, ell, base) if ell else _window_operator(t, m)
            val = matrix_element(u, ElemTensor(op.tail, op.devs, op.coeff * t.coeff), v, mu, depth)
        elif path == "limit":
            N = max(depth, m)
            vec_max = max([0] + [max(s.support, default=0) for s in _as_elem(u).terms + _as_elem(v).terms])
            N = max(N, vec_max)
            fin = ElemTensor(UNIT_TAIL, {j: t.slot(j) for j in range(1, N + 1)}, t.coeff)
            val = matrix_element(u, fin, v, mu, depth)
            if ell:
                val = val * integral_tail(base, mu, N + 1, depth, ell=ell).bracket
        else:
            raise ValueError("path must be 'window' or 'limit'")
        total = total + val * (q ** ell)
    return total


@dataclass(frozen=True)
class SemigroupCheck:
    residual: float
    lhs: Bracket
    rhs: Bracket
    slack: float

    @property
    def passed(self) -> bool:
        return self.lhs.determined and self.rhs.determined and self.residual <= self.slack + 1e-12


def excess_semigroup_check(f: StabSeq, g: StabSeq, rep, u=None, v=None, depth: int = 64) -> SemigroupCheck:
    """Compare <u, Q_f Q_g v> with <u, Q_{fg} v>.

    The left side applies B_m[g] and then B_n[f] lazily to v and passes to the
    limit in each factor separately; the right side uses the product tail
    class directly.
    """
    if isinstance(rep, Character):
        if rep.q != 1.0:
            raise ValueError("the excess semigroup is checked on point characters (q = 1)")
        lhs = excess_elem(f, rep) * excess_elem(g, rep)
        fg = TailClass([(f, 1), (g, 1)])
        verdict = tail_product(rep.point, fg, 1, rep.point.last_deviation + 1, 256)
        rhs = (Bracket.exact(1.0) if isinstance(verdict, Limit) else
               Bracket.exact(0.0) if isinstance(verdict, InNf) else Bracket.interval(0.0, 1.0, False))
        return SemigroupCheck(abs(lhs.value - rhs.value), lhs, rhs, lhs.radius + rhs.radius)
    mu = rep
    u = u or VecElem.omega(mu)
    v = v or VecElem.omega(mu)
    vec_max = max([0] + [max(s.support, default=0) for s in _as_elem(u).terms + _as_elem(v).terms])
    n = vec_max + depth
    # left: lazily applied tail units, each passed to its own limit
    lazy = LazyVec(v).apply(F_operator(n, 1, g)).apply(F_operator(n, 1, f))
    finite_lhs = inner(u, lazy, mu, depth)
    lim_g, _ = _limit_factor(g, mu, n, depth)
    lim_f, _ = _limit_factor(f, mu, n, depth)
    uv = inner(u, v, mu, depth)
    if lim_f is None or lim_g is None:
        lhs = Bracket(finite_lhs.value, abs(finite_lhs.value) + finite_lhs.radius, False)
    else:
        lhs = finite_lhs.hull(uv * (lim_f * lim_g))
    # right: the product class as a single tail
    fg = TailClass([(f, 1), (g, 1)])
    op = ElemTensor(fg, {j: ONE for j in range(1, n)})
    finite_rhs = matrix_element(u, op, v, mu, depth)
    lim_fg, _ = _limit_factor(fg, mu, n, depth)
    if lim_fg is None:
        rhs = Bracket(finite_rhs.value, abs(finite_rhs.value) + finite_rhs.radius, False)
    else:
        rhs = finite_rhs.hull(uv * lim_fg)
    lhs_lim = uv.value * (lim_f or 0.0) * (lim_g or 0.0)
    rhs_lim = uv.value * (lim_fg or 0.0)
    return SemigroupCheck(abs(lhs_lim - rhs_lim), lhs, rhs, lhs.radius + rhs.radius)


__all__ = [
    "VecElem", "LazyVec", "expectation", "inner", "matrix_element", "vn_equiv", "EquivVerdict",
    "F_operator", "F_elem", "F_partials", "P_elem", "excess_elem", "piQ_eval",
    "excess_semigroup_check", "SemigroupCheck",
]
