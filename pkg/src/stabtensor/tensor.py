"""Algebraic infinite tensor products of C0(R) in normal form.

An elementary tensor is a stabilizing tail (a product of bump sequences with
exponents, or the all-ones unit tail) together with finitely many deviating
slots and a coefficient.  Slot n of the tail is the product over its factors
of ``bump(k_n)^e``; because a bump of level k is identically one on the
support of any lower-level bump, this collapses to ``bump(k_min)^(sum of the
exponents attaining k_min)``.

Deviations are kept scaled so that their pivot coefficient is one, with the
scale folded into the term coefficient.  A deviation that is a multiple of
the tail slot is absorbed, a zero deviation kills the term.  Together with
merging of like terms this is a canonical form for the span of elementary
tensors, so equality is decided by subtraction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import InvalidLevelError, TailClosureError, WindowTooSmallError
from .fnalg import ONE, ScalarFn, bump_power, sup_norm_bound
from .measures import Budget, GeometricBudget, PowerBudget, ProductMeasure, least_level, LEVEL_CAP

COEFF_TOL = 1e-14


# ---------------------------------------------------------------------------
# level rules and stabilizing sequences


class LevelRule:
    def level(self, n: int) -> int:
        raise NotImplementedError

    def levels(self, depth: int) -> list[int]:
        return [self.level(n) for n in range(1, depth + 1)]

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PeriodicLevels(LevelRule):
    """Finite prefix, then ``period`` repeated forever."""

    prefix: tuple = ()
    period: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(k) for k in self.prefix))
        object.__setattr__(self, "period", tuple(int(k) for k in self.period))
        if not self.period:
            raise ValueError("period must be nonempty")
        if any(k < 1 for k in self.prefix + self.period):
            raise InvalidLevelError("levels must be integers >= 1")

    def level(self, n: int) -> int:
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        return self.period[(n - len(self.prefix) - 1) % len(self.period)]

    @property
    def periodic_start(self) -> int:
        return len(self.prefix) + 1

    def to_json(self) -> dict:
        return {"kind": "periodic", "prefix": list(self.prefix), "period": list(self.period)}


@dataclass(frozen=True)
class SelectedLevels(LevelRule):
    """k_n = least level whose plateau deficit under mu_n is at most budget(n)."""

    measure: ProductMeasure
    budget: Budget = field(default_factory=GeometricBudget)
    cap: int = LEVEL_CAP

    def level(self, n: int) -> int:
        return least_level(self.measure[n], self.budget(n), self.cap)

    def to_json(self) -> dict:
        b = self.budget
        bj = {"kind": "power", "p": b.p} if isinstance(b, PowerBudget) else {"kind": "geometric", "ratio": b.ratio}
        return {"kind": "selected", "measure": self.measure.to_json(), "budget": bj, "cap": self.cap}


def rule_from_json(data: dict) -> LevelRule:
    if data["kind"] == "periodic":
        return PeriodicLevels(tuple(data.get("prefix", ())), tuple(data["period"]))
    if data["kind"] == "selected":
        b = data["budget"]
        budget = PowerBudget(b["p"]) if b["kind"] == "power" else GeometricBudget(b["ratio"])
        return SelectedLevels(ProductMeasure.from_json(data["measure"]), budget, int(data.get("cap", LEVEL_CAP)))
    raise ValueError(f"unknown level rule {data['kind']!r}")


@dataclass(frozen=True)
class StabSeq:
    """Sequence of canonical bumps f_n in V_{k_n}; never zero in any slot."""

    id: str
    rule: LevelRule

    def level(self, n: int) -> int:
        return self.rule.level(n)

    def slot(self, n: int, power: int = 1) -> ScalarFn:
        return bump_power(self.level(n), power)

    def to_json(self) -> dict:
        return {"id": self.id, "levels": self.rule.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "StabSeq":
        return cls(data["id"], rule_from_json(data["levels"]))

    def __repr__(self) -> str:
        return f"StabSeq({self.id!r})"


def constant_seq(k: int, id: str | None = None) -> StabSeq:
    return StabSeq(id or f"const{k}", PeriodicLevels((), (k,)))


def periodic_seq(id: str, period: Iterable[int], prefix: Iterable[int] = ()) -> StabSeq:
    return StabSeq(id, PeriodicLevels(tuple(prefix), tuple(period)))


class TailClass(tuple):
    """Monomial of stabilizing sequences: sorted tuple of (StabSeq, exponent)."""

    def __new__(cls, factors: Iterable = ()):
        acc: dict = {}
        for seq, e in factors:
            if int(e) < 1:
                raise ValueError("tail exponents must be >= 1")
            prev = acc.get(seq.id)
            if prev is not None and prev[0] != seq:
                raise TailClosureError(f"two different sequences share the id {seq.id!r}")
            acc[seq.id] = (seq, (prev[1] if prev else 0) + int(e))
        return super().__new__(cls, tuple(acc[k] for k in sorted(acc)))

    @property
    def is_unit(self) -> bool:
        return len(self) == 0

    @property
    def key(self) -> tuple:
        return tuple((s.id, e) for s, e in self)

    def __mul__(self, other: "TailClass") -> "TailClass":
        return TailClass(tuple(self) + tuple(other))

    def power_of(self, seq: StabSeq) -> int | None:
        """ell if this class is seq^ell, 0 for the unit tail, else None."""
        if self.is_unit:
            return 0
        if len(self) == 1 and self[0][0] == seq:
            return self[0][1]
        return None

    def slot(self, n: int) -> ScalarFn:
        if self.is_unit:
            return ONE
        lv = [(s.level(n), e) for s, e in self]
        kmin = min(k for k, _ in lv)
        return bump_power(kmin, sum(e for k, e in lv if k == kmin))

    def to_json(self) -> list:
        return [{"seq": s.to_json(), "exp": e} for s, e in self]

    @classmethod
    def from_json(cls, data: list) -> "TailClass":
        return cls((StabSeq.from_json(d["seq"]), d["exp"]) for d in data)

    def __repr__(self) -> str:
        if self.is_unit:
            return "UnitTail"
        return "*".join(f"{s.id}^{e}" for s, e in self)


UNIT_TAIL = TailClass()


# ---------------------------------------------------------------------------
# elementary tensors


class ElemTensor:
    """coefficient * (deviations on finitely many slots) (x) tail slots elsewhere."""

    __slots__ = ("tail", "devs", "coeff")

    def __init__(self, tail: TailClass, devs: Mapping[int, ScalarFn] | Iterable = (), coeff: complex = 1.0):
        tail = tail if isinstance(tail, TailClass) else TailClass(tail)
        items = devs.items() if isinstance(devs, Mapping) else devs
        coeff = complex(coeff)
        out = []
        for n, d in sorted(items, key=lambda p: p[0]):
            if n < 1:
                raise IndexError("slots are 1-based")
            if coeff == 0:
                break
            d, lam = _normalize_slot(tail, int(n), d)
            coeff *= lam
            if d is not None:
                out.append((int(n), d))
        if coeff == 0:
            out = []
        self.tail = tail
        self.devs = tuple(out)
        self.coeff = coeff

    @classmethod
    def _raw(cls, tail, devs, coeff):
        obj = cls.__new__(cls)
        obj.tail, obj.devs, obj.coeff = tail, devs, coeff
        return obj

    def slot(self, n: int) -> ScalarFn:
        for m, d in self.devs:
            if m == n:
                return d
        return self.tail.slot(n)

    @property
    def support(self) -> tuple:
        return tuple(n for n, _ in self.devs)

    @property
    def group_key(self) -> tuple:
        return (self.tail.key, self.support)

    def same_shape(self, other: "ElemTensor") -> bool:
        if self.group_key != other.group_key:
            return False
        return all(a.allclose(b) for (_, a), (_, b) in zip(self.devs, other.devs))

    def sort_key(self) -> tuple:
        return (self.tail.key, self.support, tuple(d.sort_key() for _, d in self.devs))

    def __mul__(self, other: "ElemTensor") -> "ElemTensor":
        tail = self.tail * other.tail
        idx = sorted(set(self.support) | set(other.support))
        devs = [(n, self.slot(n).mul(other.slot(n))) for n in idx]
        return ElemTensor(tail, devs, self.coeff * other.coeff)

    def adjoint(self) -> "ElemTensor":
        return ElemTensor._raw(self.tail, tuple((n, d.conj()) for n, d in self.devs), self.coeff.conjugate())

    def __repr__(self) -> str:
        devs = ", ".join(f"{n}: {d!r}" for n, d in self.devs)
        return f"ElemTensor({self.coeff!r}, tail={self.tail!r}, devs={{{devs}}})"


def _normalize_slot(tail: TailClass, n: int, d: ScalarFn):
    """Return (deviation or None, scalar) with d == scalar * deviation (or * tail slot)."""
    if d.is_zero():
        return None, 0.0
    sn, ps = _unit_slot(tail.slot(n))
    pd = d.pivot()
    dn = d.scale(1.0 / pd)
    if dn.allclose(sn):
        return None, pd / ps
    return dn, pd


_UNIT_SLOTS: dict = {}


def _unit_slot(s: ScalarFn):
    """Tail slot scaled by its pivot, and the pivot (memoized; tail slots repeat)."""
    k = s.key()
    hit = _UNIT_SLOTS.get(k)
    if hit is None:
        ps = s.pivot()
        hit = _UNIT_SLOTS[k] = (s.scale(1.0 / ps), ps)
    return hit


def equivalent(x: ElemTensor, y: ElemTensor) -> bool:
    """True iff x and y differ in finitely many slots, i.e. share the tail class."""
    return x.tail.key == y.tail.key


# ---------------------------------------------------------------------------
# linear combinations


class TensorElem:
    """Finite linear combination of elementary tensors in canonical order."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[ElemTensor] = ()):
        self.terms = _merge(terms)

    @classmethod
    def elem(cls, tail, devs=(), coeff: complex = 1.0) -> "TensorElem":
        return cls([ElemTensor(tail if isinstance(tail, TailClass) else TailClass(tail), devs, coeff)])

    @classmethod
    def pure_tail(cls, seq: StabSeq, exponent: int = 1, coeff: complex = 1.0) -> "TensorElem":
        return cls.elem(TailClass([(seq, exponent)]), (), coeff)

    @classmethod
    def unit(cls, coeff: complex = 1.0) -> "TensorElem":
        return cls.elem(UNIT_TAIL, (), coeff)

    @classmethod
    def zero(cls) -> "TensorElem":
        return cls()

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "TensorElem") -> "TensorElem":
        return TensorElem(self.terms + other.terms)

    def __neg__(self) -> "TensorElem":
        return self.scale(-1.0)

    def __sub__(self, other: "TensorElem") -> "TensorElem":
        return self + (-other)

    def scale(self, lam: complex) -> "TensorElem":
        lam = complex(lam)
        return TensorElem([ElemTensor._raw(t.tail, t.devs, t.coeff * lam) for t in self.terms])

    def __rmul__(self, lam) -> "TensorElem":
        return self.scale(lam)

    def __mul__(self, other):
        if isinstance(other, TensorElem):
            return mul(self, other)
        return self.scale(other)

    def adjoint(self) -> "TensorElem":
        return TensorElem([t.adjoint() for t in self.terms])

    def classes(self) -> dict:
        """Grading: tail-class key -> homogeneous component."""
        out: dict = {}
        for t in self.terms:
            out.setdefault(t.tail.key, []).append(t)
        return {k: TensorElem(v) for k, v in out.items()}

    def is_homogeneous(self) -> bool:
        return len({t.tail.key for t in self.terms}) <= 1

    def allclose(self, other: "TensorElem", tol: float = 1e-12) -> bool:
        diff = self - other
        scale = max([1.0] + [abs(t.coeff) for t in self.terms] + [abs(t.coeff) for t in other.terms])
        return all(abs(t.coeff) <= tol * scale for t in diff.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorElem):
            return NotImplemented
        return self.allclose(other)

    __hash__ = None

    def __repr__(self) -> str:
        return "TensorElem([" + ", ".join(repr(t) for t in self.terms) + "])"

    def to_json(self) -> dict:
        return {"terms": [{"coeff": [t.coeff.real, t.coeff.imag], "tail": t.tail.to_json(),
                           "devs": [{"slot": n, "fn": d.to_json()} for n, d in t.devs]}
                          for t in self.terms]}

    @classmethod
    def from_json(cls, data: dict) -> "TensorElem":
        return cls(ElemTensor(TailClass.from_json(t["tail"]),
                              [(d["slot"], ScalarFn.from_json(d["fn"])) for d in t["devs"]],
                              complex(*t["coeff"]))
                   for t in data["terms"])


def _merge(terms: Iterable[ElemTensor]) -> tuple:
    groups: dict = {}
    for t in terms:
        if t.coeff == 0:
            continue
        bucket = groups.setdefault(t.group_key, [])
        for i, (rep, c) in enumerate(bucket):
            if rep.same_shape(t):
                bucket[i] = (rep, c + t.coeff)
                break
        else:
            bucket.append((t, t.coeff))
    out = []
    for bucket in groups.values():
        for rep, c in bucket:
            if abs(c) > COEFF_TOL:
                out.append(ElemTensor._raw(rep.tail, rep.devs, c))
    out.sort(key=ElemTensor.sort_key)
    return tuple(out)


def mul(a: TensorElem, b: TensorElem) -> TensorElem:
    return TensorElem([x * y for x in a.terms for y in b.terms])


def adjoint(a: TensorElem) -> TensorElem:
    return a.adjoint()


# ---------------------------------------------------------------------------
# finite windows


class WindowTensor:
    """Element of the algebraic tensor product over a finite index window.

    Stored as a unit-tail TensorElem whose deviations all lie in ``indices``.
    """

    __slots__ = ("indices", "elem")

    def __init__(self, indices: Iterable[int], elem: TensorElem):
        self.indices = tuple(sorted(set(indices)))
        self.elem = elem

    def __mul__(self, other: "WindowTensor") -> "WindowTensor":
        return WindowTensor(set(self.indices) | set(other.indices), mul(self.elem, other.elem))

    def __add__(self, other: "WindowTensor") -> "WindowTensor":
        return WindowTensor(set(self.indices) | set(other.indices), self.elem + other.elem)

    def scalar(self) -> complex:
        """Value when the window is empty."""
        return sum((t.coeff for t in self.elem.terms), 0j)

    def evaluate(self, points: Mapping[int, float]) -> complex:
        total = 0j
        for t in self.elem.terms:
            v = t.coeff
            for n, d in t.devs:
                v *= d(points.get(n, 0.0))
            total += v
        return total

    def allclose(self, other: "WindowTensor", tol: float = 1e-12) -> bool:
        return self.elem.allclose(other.elem, tol)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WindowTensor):
            return NotImplemented
        return self.allclose(other)

    __hash__ = None

    def __repr__(self) -> str:
        return f"WindowTensor({list(self.indices)}, {self.elem!r})"


def _contract(d: ScalarFn) -> complex:
    # normalizing functional: evaluation at 0, where every tail slot equals 1
    return d(0.0)


def window_project(a: TensorElem, base: ElemTensor | TailClass, window: Iterable[int],
                   strict: bool = True) -> WindowTensor:
    """Project onto the finite window ``window`` relative to ``base``'s tail class.

    Terms in other classes map to zero.  Off-window deviations of equivalent
    terms raise WindowTooSmallError unless ``strict`` is False, in which case
    they are contracted by evaluation at 0.
    """
    F = tuple(sorted(set(int(n) for n in window)))
    tail = base.tail if isinstance(base, ElemTensor) else base
    out = []
    for t in a.terms:
        if t.tail.key != tail.key:
            continue
        coeff = t.coeff
        outside = [(n, d) for n, d in t.devs if n not in F]
        if outside and strict:
            raise WindowTooSmallError(
                f"deviation at slot {outside[0][0]} lies outside the window {list(F)}; enlarge it")
        for _, d in outside:
            coeff *= _contract(d)
        out.append(ElemTensor(UNIT_TAIL, [(n, t.slot(n)) for n in F], coeff))
    return WindowTensor(F, TensorElem(out))


def regroup_check(a: TensorElem, b: TensorElem, m: int, tol: float = 1e-12) -> bool:
    """Check that multiplication factors through the block split (slots <= m) x (slots > m).

    Path one multiplies directly.  Path two splits every term into a head over
    slots 1..m and a rest carrying the tail (with ones in the head slots),
    multiplies heads and rests separately and reassembles.  Windowing the
    product at 1..m (contracting the rest) must also agree with the product of
    the windows, class by class.
    """
    if m < 1:
        raise ValueError("cut must be >= 1")
    direct = mul(a, b)

    def split(t: ElemTensor):
        head = ElemTensor(UNIT_TAIL, [(n, t.slot(n)) for n in range(1, m + 1)], t.coeff)
        rest = ElemTensor(t.tail, [(n, ONE) for n in range(1, m + 1)]
                          + [(n, d) for n, d in t.devs if n > m], 1.0)
        return head, rest

    def join(head: ElemTensor, rest: ElemTensor) -> ElemTensor:
        devs = [(n, head.slot(n)) for n in range(1, m + 1)] + [(n, d) for n, d in rest.devs if n > m]
        return ElemTensor(rest.tail, devs, head.coeff * rest.coeff)

    blocks = []
    for x in a.terms:
        hx, rx = split(x)
        for y in b.terms:
            hy, ry = split(y)
            blocks.append(join(hx * hy, rx * ry))
    if not TensorElem(blocks).allclose(direct, tol):
        return False
    window = range(1, m + 1)
    for ka, ca in a.classes().items():
        for kb, cb in b.classes().items():
            prod = mul(ca, cb)
            if prod.is_zero():
                continue
            tail = prod.terms[0].tail
            lhs = window_project(prod, tail, window, strict=False)
            rhs = (window_project(ca, ca.terms[0].tail, window, strict=False)
                   * window_project(cb, cb.terms[0].tail, window, strict=False))
            if not lhs.allclose(rhs, tol):
                return False
    return True


# ---------------------------------------------------------------------------
# modulation action and norm bounds


def eta_act(x: Mapping[int, float] | Iterable[float], a: TensorElem) -> TensorElem:
    """Multiply slot j by exp(i x_j t) for every j in the (finite) support of x."""
    items = x.items() if isinstance(x, Mapping) else enumerate(x, start=1)
    shift = {int(n): float(v) for n, v in items if v != 0}
    if not shift:
        return a
    out = []
    for t in a.terms:
        idx = sorted(set(t.support) | set(shift))
        devs = [(n, t.slot(n).modulate(shift[n]) if n in shift else t.slot(n)) for n in idx]
        out.append(ElemTensor(t.tail, devs, t.coeff))
    return TensorElem(out)


def cross_norm_upper(a: TensorElem, refinement: int = 64) -> float:
    """Triangle-inequality bound: sum |coeff| * prod of deviation sup norms (tail slots have norm 1)."""
    total = 0.0
    for t in a.terms:
        v = abs(t.coeff)
        for _, d in t.devs:
            v *= sup_norm_bound(d, refinement).upper
        total += v
    return float(total)


def tail_polynomial(seq: StabSeq, coeffs: Iterable[complex]) -> TensorElem:
    """sum_l c_l * <seq^l>, l >= 1 (c_0 must be zero: constants are not in C0)."""
    coeffs = list(coeffs)
    if coeffs and coeffs[0] != 0:
        raise ValueError("constant coefficient must vanish for tail polynomials")
    return TensorElem([ElemTensor(TailClass([(seq, l)]), (), c) for l, c in enumerate(coeffs) if l >= 1 and c != 0])


__all__ = [
    "LevelRule", "PeriodicLevels", "SelectedLevels", "StabSeq", "TailClass", "UNIT_TAIL",
    "ElemTensor", "TensorElem", "WindowTensor", "constant_seq", "periodic_seq", "mul", "adjoint",
    "equivalent", "window_project", "regroup_check", "eta_act", "cross_norm_upper", "tail_polynomial",
    "rule_from_json",
]
