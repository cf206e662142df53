"""Normal-form algebra of scalar functions on the real line.

Two value types live here.  :class:`PiecewisePoly` is a compactly supported
piecewise polynomial whose pieces are stored in *local* coordinates
``s = t - left_breakpoint``; this keeps powers of the trapezoidal bumps
well conditioned even at large levels.  :class:`ScalarFn` is

    constant + sum_w exp(i w t) * (R_w(t) + i I_w(t))

with real envelopes ``R_w``, ``I_w``.  Exposed as terms this is a list of
``(frequency, envelope, coefficient)`` with coefficient ``1`` or ``1j``, which
makes the representation canonical: equal functions have equal normal forms.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .errors import DegreeOverflowError, InvalidLevelError, UnsupportedModulationError

DEGREE_CAP = 16
BREAK_TOL = 1e-12
COEF_TOL = 1e-12
FREQ_TOL = 1e-12
_CLEAN_REL = 1e-15


def _taylor_shift(c: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Rows p(s) -> p(s + h_row), by repeated synthetic division."""
    c = np.array(c, dtype=np.result_type(c, np.float64), copy=True)
    d = c.shape[1] - 1
    h = np.asarray(h, dtype=np.float64)
    for i in range(d):
        for j in range(d - 1, i - 1, -1):
            c[:, j] += h * c[:, j + 1]
    return c


def _union_breaks(*arrays) -> np.ndarray:
    pts = np.sort(np.concatenate([np.asarray(a, dtype=np.float64) for a in arrays if len(a)]))
    if pts.size == 0:
        return pts
    keep = [pts[0]]
    for x in pts[1:]:
        if x - keep[-1] > BREAK_TOL:
            keep.append(x)
    return np.asarray(keep)


def _polymul_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0], a.shape[1] + b.shape[1] - 1), dtype=np.result_type(a, b))
    for i in range(a.shape[1]):
        out[:, i:i + b.shape[1]] += a[:, i:i + 1] * b
    return out


def _restrict_rows(breaks: np.ndarray, coeffs: np.ndarray, nb: np.ndarray) -> np.ndarray:
    """Rows of a piecewise polynomial (real or complex) re-expanded on the cells of ``nb``."""
    ncell = max(nb.size - 1, 0)
    out = np.zeros((ncell, max(coeffs.shape[1], 1)), dtype=coeffs.dtype)
    npieces = breaks.size - 1
    if ncell == 0 or npieces <= 0:
        return out
    if nb.size == breaks.size and np.array_equal(nb, breaks):
        out[:] = coeffs
        return out
    left = nb[:-1]
    mid = 0.5 * (nb[:-1] + nb[1:])
    idx = np.searchsorted(breaks, mid, side="right") - 1
    ok = (idx >= 0) & (idx < npieces) & (mid <= breaks[-1])
    if np.any(ok):
        out[ok] = _taylor_shift(coeffs[idx[ok]], left[ok] - breaks[idx[ok]])
    return out


def _sum_pieces(pieces: list) -> tuple:
    """Sum (breaks, complex rows) pieces into canonical (real, imaginary) envelopes."""
    if not pieces:
        return PiecewisePoly.zero(), PiecewisePoly.zero()
    if len(pieces) == 1:
        nb, total = pieces[0]
    else:
        nb, total = kernels.env_sum([(np.ascontiguousarray(b, dtype=np.float64), _crow(c)) for b, c in pieces],
                                    BREAK_TOL)
    if total.shape[0] == 0:
        return PiecewisePoly.zero(), PiecewisePoly.zero()
    return (PiecewisePoly._make(*PiecewisePoly._canonicalize(nb, total.real)),
            PiecewisePoly._make(*PiecewisePoly._canonicalize(nb, total.imag)))


def _crow(c: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(c, dtype=np.complex128)

class PiecewisePoly:
    """Compactly supported piecewise polynomial, zero outside its breakpoints.

    ``coeffs[i, k]`` multiplies ``(t - breaks[i])**k`` on ``[breaks[i], breaks[i+1]]``.
    Construction canonicalizes: tiny coefficients are cleaned, equal adjacent
    pieces merged and zero end pieces trimmed.
    """

    __slots__ = ("breaks", "coeffs")

    def __init__(self, breaks, coeffs, _canonical: bool = False):
        b = np.asarray(breaks, dtype=np.float64).reshape(-1)
        c = np.asarray(coeffs, dtype=np.float64)
        if c.ndim == 1:
            c = c.reshape(-1, 1) if b.size == 2 and c.size != 1 else c.reshape(b.size - 1 if b.size else 0, -1)
        if b.size and c.shape[0] != b.size - 1:
            raise ValueError("need len(breaks) - 1 coefficient rows")
        if not _canonical:
            b, c = self._canonicalize(b, c)
        b.setflags(write=False)
        c.setflags(write=False)
        self.breaks = b
        self.coeffs = c

    @classmethod
    def _make(cls, b: np.ndarray, c: np.ndarray) -> "PiecewisePoly":
        """Wrap arrays already in canonical form (no checks)."""
        obj = cls.__new__(cls)
        b.setflags(write=False)
        c.setflags(write=False)
        obj.breaks = b
        obj.coeffs = c
        return obj

    @staticmethod
    def _canonicalize(b: np.ndarray, c: np.ndarray):
        return kernels.pp_canonicalize(np.ascontiguousarray(b), np.ascontiguousarray(c),
                                       _CLEAN_REL, BREAK_TOL, COEF_TOL)

    # construction helpers
    @classmethod
    def zero(cls) -> "PiecewisePoly":
        return _ZERO_PP

    @classmethod
    def constant_on(cls, a: float, b: float, value: float = 1.0) -> "PiecewisePoly":
        return cls([a, b], [[value]])

    # basic properties
    @property
    def npieces(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return 0 if self.npieces == 0 else self.coeffs.shape[1] - 1

    def is_zero(self) -> bool:
        return self.npieces == 0

    @property
    def support(self) -> tuple[float, float] | None:
        if self.is_zero():
            return None
        return float(self.breaks[0]), float(self.breaks[-1])

    def __call__(self, t):
        arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = kernels.pp_eval(np.ascontiguousarray(self.breaks),
                              np.ascontiguousarray(self.coeffs),
                              np.ascontiguousarray(arr.ravel()))
        out = np.asarray(out).reshape(arr.shape)
        return float(out[0]) if np.ndim(t) == 0 else out

    def restrict(self, new_breaks: np.ndarray) -> np.ndarray:
        """Coefficient rows of ``self`` on every cell of ``new_breaks`` (local coords)."""
        return _restrict_rows(self.breaks, self.coeffs, np.asarray(new_breaks, dtype=np.float64))

    def _binary(self, other: "PiecewisePoly"):
        nb = _union_breaks(self.breaks, other.breaks)
        return nb, self.restrict(nb), other.restrict(nb)

    def __add__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        nb, a, b = self._binary(other)
        w = max(a.shape[1], b.shape[1])
        a = np.pad(a, ((0, 0), (0, w - a.shape[1])))
        b = np.pad(b, ((0, 0), (0, w - b.shape[1])))
        return PiecewisePoly(nb, a + b)

    def __neg__(self) -> "PiecewisePoly":
        return self.scale(-1.0)

    def __sub__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        return self + (-other)

    def scale(self, a: float) -> "PiecewisePoly":
        if a == 0.0 or self.is_zero():
            return PiecewisePoly.zero()
        # relative cleanup and merging are invariant under nonzero scaling
        return PiecewisePoly._make(self.breaks, self.coeffs * float(a))

    def mul(self, other: "PiecewisePoly", cap: int | None = DEGREE_CAP) -> "PiecewisePoly":
        if self.is_zero() or other.is_zero():
            return PiecewisePoly.zero()
        if cap is not None and self.degree + other.degree > cap:
            raise DegreeOverflowError(
                f"product degree {self.degree + other.degree} exceeds cap {cap}; "
                "refine pieces or lower tail exponents")
        lo = max(self.breaks[0], other.breaks[0])
        hi = min(self.breaks[-1], other.breaks[-1])
        if hi - lo <= BREAK_TOL:
            return PiecewisePoly.zero()
        nb, a, b = self._binary(other)
        return PiecewisePoly(nb, _polymul_rows(a, b))

    __mul__ = mul

    def derivative(self) -> "PiecewisePoly":
        if self.degree == 0:
            return PiecewisePoly.zero()
        k = np.arange(1, self.coeffs.shape[1])
        return PiecewisePoly(self.breaks, self.coeffs[:, 1:] * k)

    def integral(self) -> float:
        """Exact Lebesgue integral over the real line."""
        if self.is_zero():
            return 0.0
        w = np.diff(self.breaks)
        k = np.arange(self.coeffs.shape[1])
        return float(np.sum(self.coeffs * w[:, None] ** (k + 1) / (k + 1)))

    def integral_over(self, a: float, b: float) -> float:
        if self.is_zero() or b <= a:
            return 0.0
        return self._clip(a, b).integral()

    def _clip(self, a: float, b: float) -> "PiecewisePoly":
        nb = _union_breaks(self.breaks, [a, b])
        nb = nb[(nb >= a - BREAK_TOL) & (nb <= b + BREAK_TOL)]
        if nb.size < 2:
            return PiecewisePoly.zero()
        return PiecewisePoly(nb, self.restrict(nb))

    def piece_abs_bounds(self) -> np.ndarray:
        """Per-piece upper bounds of |p| via sum |c_k| w^k."""
        if self.is_zero():
            return np.zeros(0)
        w = np.diff(self.breaks)
        k = np.arange(self.coeffs.shape[1])
        return np.sum(np.abs(self.coeffs) * w[:, None] ** k, axis=1)

    def allclose(self, other: "PiecewisePoly", tol: float = COEF_TOL) -> bool:
        if self.is_zero() and other.is_zero():
            return True
        if self.is_zero() or other.is_zero():
            d = self if other.is_zero() else other
            return bool(np.max(np.abs(d.coeffs)) <= tol)
        nb, a, b = self._binary(other)
        w = max(a.shape[1], b.shape[1])
        a = np.pad(a, ((0, 0), (0, w - a.shape[1])))
        b = np.pad(b, ((0, 0), (0, w - b.shape[1])))
        scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
        return bool(np.all(np.abs(a - b) <= tol * scale))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        return (self.breaks.shape == other.breaks.shape and self.coeffs.shape == other.coeffs.shape
                and bool(np.all(self.breaks == other.breaks)) and bool(np.all(self.coeffs == other.coeffs)))

    def __hash__(self) -> int:
        return hash((self.breaks.tobytes(), self.coeffs.tobytes(), self.coeffs.shape))

    def __repr__(self) -> str:
        return f"PiecewisePoly(breaks={self.breaks.tolist()}, coeffs={self.coeffs.tolist()})"

    def to_json(self) -> dict:
        return {"breaks": self.breaks.tolist(), "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "PiecewisePoly":
        if not data["breaks"]:
            return cls.zero()
        return cls(data["breaks"], data["coeffs"])


_ZERO_PP = PiecewisePoly(np.zeros(0), np.zeros((0, 1)), _canonical=True)


class Term(NamedTuple):
    frequency: float
    envelope: PiecewisePoly
    coefficient: complex


def _cluster_freq(acc: dict, w: float) -> float:
    for key in acc:
        if abs(key - w) <= FREQ_TOL:
            return key
    return w


def _complex_env(re: PiecewisePoly, im: PiecewisePoly) -> tuple:
    if im.is_zero():
        return re.breaks, re.coeffs.astype(np.complex128)
    if re.is_zero():
        return im.breaks, 1j * im.coeffs
    nb = _union_breaks(re.breaks, im.breaks)
    a, b = re.restrict(nb), im.restrict(nb)
    w = max(a.shape[1], b.shape[1])
    rows = np.zeros((a.shape[0], w), dtype=np.complex128)
    rows[:, :a.shape[1]] += a
    rows[:, :b.shape[1]] += 1j * b
    return nb, rows


def _gap_exceeds(a: PiecewisePoly, b: PiecewisePoly, bound: float) -> bool:
    """Whether the canonical difference a - b has a coefficient above ``bound``.

    Point values decide cheaply first: coefficients of modulus at most c
    on a cell of width w bound the values by c * sum_k w^k.
    """
    if a.is_zero() or b.is_zero() or (a.coeffs.shape == b.coeffs.shape and np.array_equal(a.breaks, b.breaks)):
        return _envelope_gap(a, b) > bound
    width = max(float(np.max(np.diff(a.breaks))), float(np.max(np.diff(b.breaks))), 1.0)
    deg = max(a.degree, b.degree)
    reach = bound * sum(width ** k for k in range(deg + 1))
    pts = np.concatenate([0.5 * (a.breaks[:-1] + a.breaks[1:]), 0.5 * (b.breaks[:-1] + b.breaks[1:])])
    if float(np.max(np.abs(a(pts) - b(pts)))) > 2.0 * reach:
        return True
    return _envelope_gap(a, b) > bound


def _envelope_gap(a: PiecewisePoly, b: PiecewisePoly) -> float:
    """Largest coefficient of the canonical difference a - b."""
    if a.is_zero() or b.is_zero():
        e = a if b.is_zero() else b
        return float(np.max(np.abs(e.coeffs), initial=0.0))
    if a.coeffs.shape == b.coeffs.shape and np.array_equal(a.breaks, b.breaks):
        return float(np.max(np.abs(a.coeffs - b.coeffs)))
    return float(np.max(np.abs((a - b).coeffs), initial=0.0))

_MUL_CACHE: dict = {}
_MUL_CACHE_SIZE = 8192


class ScalarFn:
    """Complex function ``constant + sum coeff * exp(i w t) * envelope(t)`` in normal form."""

    __slots__ = ("constant", "_parts", "_sort_key", "_key", "_env", "_cmax")

    def __init__(self, constant: complex = 0.0, terms: Iterable = ()):
        acc: dict = {}
        for w, env, coef in terms:
            self._accumulate(acc, float(w), env, complex(coef))
        self.constant = complex(constant)
        self._parts = self._finish(acc)

    # The accumulator maps a frequency to a list of (breaks, complex rows)
    # pieces, summed and canonicalized once in _finish.
    @staticmethod
    def _accumulate(acc: dict, w: float, env: PiecewisePoly, coef: complex):
        if env.is_zero() or coef == 0:
            return
        acc.setdefault(_cluster_freq(acc, w), []).append((env.breaks, env.coeffs * coef))

    @staticmethod
    def _push(acc: dict, w: float, breaks: np.ndarray, rows: np.ndarray):
        acc.setdefault(_cluster_freq(acc, w), []).append((breaks, rows))

    @staticmethod
    def _finish(acc: dict) -> tuple:
        parts = []
        for w in sorted(acc):
            re, im = _sum_pieces(acc[w])
            if re.is_zero() and im.is_zero():
                continue
            parts.append((0.0 if w == 0 else w, re, im))
        return tuple(parts)

    def _envelopes(self) -> list:
        """(frequency, breaks, complex rows) per part."""
        try:
            return self._env
        except AttributeError:
            self._env = [(w,) + _complex_env(re, im) for w, re, im in self._parts]
            return self._env

    def _coef_max(self) -> float:
        try:
            return self._cmax
        except AttributeError:
            self._cmax = max([0.0] + [float(np.max(np.abs(e.coeffs))) for _, re, im in self._parts
                                      for e in (re, im) if e.coeffs.size])
            return self._cmax

    @classmethod
    def _raw(cls, constant: complex, parts: tuple) -> "ScalarFn":
        obj = cls.__new__(cls)
        obj.constant = complex(constant)
        obj._parts = parts
        return obj

    # views
    @property
    def terms(self) -> tuple:
        out = []
        for w, re, im in self._parts:
            if not re.is_zero():
                out.append(Term(w, re, 1.0 + 0j))
            if not im.is_zero():
                out.append(Term(w, im, 1j))
        return tuple(out)

    @property
    def frequencies(self) -> tuple:
        return tuple(w for w, _, _ in self._parts)

    def is_zero(self, tol: float = 0.0) -> bool:
        if abs(self.constant) > tol:
            return False
        if tol == 0.0:
            return not self._parts
        return all(float(np.max(np.abs(e.coeffs), initial=0.0)) <= tol
                   for _, re, im in self._parts for e in (re, im))

    @property
    def degree(self) -> int:
        return max((e.degree for _, re, im in self._parts for e in (re, im) if not e.is_zero()), default=0)

    def breakpoints(self) -> np.ndarray:
        return _union_breaks(*[e.breaks for _, re, im in self._parts for e in (re, im)])

    @property
    def support(self) -> tuple[float, float] | None:
        """Support of the non-constant part."""
        b = self.breakpoints()
        return None if b.size == 0 else (float(b[0]), float(b[-1]))

    def is_real(self, tol: float = 0.0) -> bool:
        if abs(self.constant.imag) > tol:
            return False
        return all(w == 0.0 and (im.is_zero() or np.max(np.abs(im.coeffs)) <= tol)
                   for w, _, im in self._parts)

    # evaluation
    def __call__(self, t):
        arr = np.asarray(t, dtype=np.float64)
        flat = np.atleast_1d(arr).ravel()
        out = np.full(flat.shape, self.constant, dtype=np.complex128)
        for w, re, im in self._parts:
            env = re(flat) + 1j * im(flat) if not im.is_zero() else re(flat).astype(np.complex128)
            out += env if w == 0.0 else env * np.exp(1j * w * flat)
        return complex(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    # arithmetic
    def __add__(self, other) -> "ScalarFn":
        if not isinstance(other, ScalarFn):
            return ScalarFn._raw(self.constant + complex(other), self._parts)
        if not other._parts:
            return ScalarFn._raw(self.constant + other.constant, self._parts)
        if not self._parts:
            return ScalarFn._raw(self.constant + other.constant, other._parts)
        acc: dict = {}
        for f in (self, other):
            for w, b, c in f._envelopes():
                self._push(acc, w, b, c)
        return ScalarFn._raw(self.constant + other.constant, self._finish(acc))

    __radd__ = __add__

    def __neg__(self) -> "ScalarFn":
        return self.scale(-1.0)

    def __sub__(self, other) -> "ScalarFn":
        return self + (-other if isinstance(other, ScalarFn) else -complex(other))

    def __rsub__(self, other) -> "ScalarFn":
        return (-self) + other

    def scale(self, lam: complex) -> "ScalarFn":
        lam = complex(lam)
        if lam == 0:
            return ScalarFn()
        if lam.imag == 0.0:
            a = lam.real
            parts = tuple((w, re.scale(a), im.scale(a)) for w, re, im in self._parts)
            return ScalarFn._raw(self.constant * lam, parts)
        a, b = lam.real, lam.imag
        parts = []
        for w, re, im in self._parts:
            if im.is_zero():
                parts.append((w, re.scale(a), re.scale(b)))
            elif re.is_zero():
                parts.append((w, im.scale(-b), im.scale(a)))
            else:
                nre, nim = _sum_pieces([_complex_env(re, im)[0:1] + (_complex_env(re, im)[1] * lam,)])
                parts.append((w, nre, nim))
        return ScalarFn._raw(self.constant * lam, tuple(p for p in parts if not (p[1].is_zero() and p[2].is_zero())))

    def mul(self, other: "ScalarFn", cap: int | None = DEGREE_CAP) -> "ScalarFn":
        # products recur heavily inside tensor arithmetic; normal forms are immutable
        if not self._parts or not other._parts:
            return self._mul(other, cap)
        k = (self.key(), other.key(), cap)
        hit = _MUL_CACHE.get(k)
        if hit is None:
            if len(_MUL_CACHE) >= _MUL_CACHE_SIZE:
                _MUL_CACHE.clear()
            hit = _MUL_CACHE[k] = self._mul(other, cap)
        return hit

    def _mul(self, other: "ScalarFn", cap: int | None) -> "ScalarFn":
        acc: dict = {}
        env1, env2 = self._envelopes(), other._envelopes()
        for c, envs in ((self.constant, env2), (other.constant, env1)):
            if c != 0:
                for w, b, rows in envs:
                    self._push(acc, w, b, rows * c)
        for (w1, b1, c1), (_, r1, i1) in zip(env1, self._parts):
            d1 = max(r1.degree, i1.degree)
            for (w2, b2, c2), (_, r2, i2) in zip(env2, other._parts):
                lo, hi = max(b1[0], b2[0]), min(b1[-1], b2[-1])
                if hi - lo <= BREAK_TOL:
                    continue
                d2 = max(r2.degree, i2.degree)
                if cap is not None and d1 + d2 > cap:
                    raise DegreeOverflowError(
                        f"product degree {d1 + d2} exceeds cap {cap}; "
                        "refine pieces or lower tail exponents")
                prod = kernels.env_mul(b1, _crow(c1[:, :d1 + 1]), b2, _crow(c2[:, :d2 + 1]), BREAK_TOL)
                if prod is None:
                    continue
                nb, rows = prod
                self._push(acc, w1 + w2, nb, rows)
        return ScalarFn._raw(self.constant * other.constant, self._finish(acc))

    def __mul__(self, other) -> "ScalarFn":
        if isinstance(other, ScalarFn):
            return self.mul(other)
        return self.scale(complex(other))

    def __rmul__(self, other) -> "ScalarFn":
        return self.scale(complex(other))

    def conj(self) -> "ScalarFn":
        parts = [(-w if w else 0.0, re, -im) for w, re, im in self._parts]
        parts.sort(key=lambda p: p[0])
        return ScalarFn._raw(self.constant.conjugate(), tuple(parts))

    def modulate(self, x: float) -> "ScalarFn":
        if self.constant != 0:
            raise UnsupportedModulationError(
                "cannot modulate a function with nonzero constant part")
        x = float(x)
        if x == 0.0:
            return self
        # a common shift keeps the frequencies distinct and sorted
        return ScalarFn._raw(0.0, tuple((0.0 if w + x == 0 else w + x, re, im) for w, re, im in self._parts))

    # comparison
    def allclose(self, other: "ScalarFn", tol: float = COEF_TOL) -> bool:
        """Coefficient-wise closeness of the normal forms, relative to the largest coefficient."""
        if abs(self.constant - other.constant) > tol * max(1.0, abs(self.constant)):
            return False
        bound = tol * max(1.0, self._coef_max(), other._coef_max())
        # parts at unmatched frequencies pass into the difference unchanged
        rest = list(other._parts)
        for w, re, im in self._parts:
            j = next((j for j, p in enumerate(rest) if abs(p[0] - w) <= FREQ_TOL), None)
            if j is None:
                if max(_envelope_gap(re, PiecewisePoly.zero()), _envelope_gap(im, PiecewisePoly.zero())) > bound:
                    return False
                continue
            _, re2, im2 = rest.pop(j)
            if _gap_exceeds(re, re2, bound) or _gap_exceeds(im, im2, bound):
                return False
        return all(max(_envelope_gap(re, PiecewisePoly.zero()), _envelope_gap(im, PiecewisePoly.zero())) <= bound
                   for _, re, im in rest)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScalarFn):
            if isinstance(other, (int, float, complex)):
                return not self._parts and abs(self.constant - other) <= COEF_TOL
            return NotImplemented
        return self.allclose(other)

    __hash__ = None

    def key(self) -> tuple:
        """Exact hashable identity, for caches."""
        try:
            return self._key
        except AttributeError:
            pass
        self._key = (self.constant,) + tuple((w, re.breaks.tobytes(), re.coeffs.tobytes(), re.coeffs.shape,
                                         im.breaks.tobytes(), im.coeffs.tobytes(), im.coeffs.shape)
                                        for w, re, im in self._parts)
        return self._key

    def sort_key(self) -> tuple:
        """Rounded key giving a deterministic order for near-equal functions."""
        try:
            return self._sort_key
        except AttributeError:
            pass

        out = [round(self.constant.real, 9), round(self.constant.imag, 9)]
        for w, re, im in self._parts:
            out.append(round(w, 9))
            for e in (re, im):
                out.extend(np.round(e.breaks, 9).tolist())
                out.extend(np.round(e.coeffs, 9).ravel().tolist())
        self._sort_key = tuple(out)
        return self._sort_key

    def pivot(self) -> complex:
        """Canonical scale: first flattened coefficient of (near) maximal modulus."""
        vals = [self.constant]
        for _, re, im in self._parts:
            vals.extend(re.coeffs.ravel().tolist())
            vals.extend((1j * v for v in im.coeffs.ravel().tolist()))
        mags = [abs(v) for v in vals]
        top = max(mags)
        if top == 0:
            return 0j
        for v, m in zip(vals, mags):
            if m >= (1 - 1e-9) * top:
                return complex(v)
        return complex(vals[int(np.argmax(mags))])

    def __repr__(self) -> str:
        inner = ", ".join(f"({w:g}, {re!r}, {im!r})" for w, re, im in self._parts)
        return f"ScalarFn(constant={self.constant!r}, parts=[{inner}])"

    def to_json(self) -> dict:
        return {
            "constant": [self.constant.real, self.constant.imag],
            "terms": [{"frequency": t.frequency, "coefficient": [t.coefficient.real, t.coefficient.imag],
                       "envelope": t.envelope.to_json()} for t in self.terms],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ScalarFn":
        c = data.get("constant", [0.0, 0.0])
        terms = [(t["frequency"], PiecewisePoly.from_json(t["envelope"]), complex(*t["coefficient"]))
                 for t in data.get("terms", [])]
        return cls(complex(c[0], c[1]), terms)


# ---------------------------------------------------------------------------
# constructors and module-level operations


def constant(c: complex) -> ScalarFn:
    return ScalarFn(c)


ONE = ScalarFn(1.0)
ZERO = ScalarFn()


@lru_cache(maxsize=None)
def bump_envelope(n: int, power: int = 1) -> PiecewisePoly:
    """Envelope of the canonical level-``n`` trapezoid raised to ``power``."""
    if power > DEGREE_CAP:
        raise DegreeOverflowError(f"bump power {power} exceeds cap {DEGREE_CAP}")
    left = np.zeros(power + 1)
    left[power] = 1.0  # s**p
    right = np.array([math.comb(power, k) * (-1) ** k for k in range(power + 1)], dtype=np.float64)
    mid = np.zeros(power + 1)
    mid[0] = 1.0
    return PiecewisePoly([-n - 1, -n, n, n + 1], np.vstack([left, mid, right]))


@lru_cache(maxsize=None)
def bump_power(n: int, power: int = 1) -> ScalarFn:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidLevelError(f"bump level must be an integer >= 1, got {n!r}")
    if power < 1:
        raise ValueError("power must be >= 1")
    return ScalarFn(0.0, [(0.0, bump_envelope(int(n), int(power)), 1.0)])


def make_bump(n: int) -> ScalarFn:
    """Canonical member of V_n: 1 on [-n, n], linear ramps to 0 at -n-1 and n+1."""
    return bump_power(n, 1)


def multiply(f: ScalarFn, g: ScalarFn) -> ScalarFn:
    return f.mul(g)


def conj(f: ScalarFn) -> ScalarFn:
    return f.conj()


def modulate(x: float, f: ScalarFn) -> ScalarFn:
    return f.modulate(x)


def exp_modulated(x: float, env: PiecewisePoly) -> ScalarFn:
    return ScalarFn(0.0, [(x, env, 1.0)])


class SupBracket(NamedTuple):
    lower: float
    upper: float


def sup_norm_bound(f: ScalarFn, refinement: int = 64) -> SupBracket:
    """Certified bracket for sup |f| over the real line.

    Every cell between envelope breakpoints is sampled at ``refinement``
    points; between samples |f| cannot exceed the mean of the endpoint values
    plus L*h/2 with L a per-cell Lipschitz bound from the envelope
    coefficients and frequencies.
    """
    if refinement < 2:
        raise ValueError("refinement must be >= 2")
    c = abs(f.constant)
    parts = f._parts
    if not parts:
        return SupBracket(c, c)
    nb = f.breakpoints()
    lower = c
    upper = c
    widths = np.diff(nb)
    lips = np.zeros(widths.size)
    for w, re, im in parts:
        for env in (re, im):
            if env.is_zero():
                continue
            rows = env.restrict(nb)
            k = np.arange(rows.shape[1])
            val_b = np.sum(np.abs(rows) * widths[:, None] ** k, axis=1)
            if rows.shape[1] > 1:
                drows = rows[:, 1:] * k[1:]
                der_b = np.sum(np.abs(drows) * widths[:, None] ** k[:-1], axis=1)
            else:
                der_b = np.zeros(widths.size)
            lips += abs(w) * val_b + der_b
    u = np.linspace(0.0, 1.0, refinement)
    for i in range(widths.size):
        a = nb[i]
        h = widths[i] / (refinement - 1)
        vals = np.abs(f(a + widths[i] * u))
        lower = max(lower, float(np.max(vals)))
        cell_up = float(np.max(0.5 * (vals[:-1] + vals[1:]))) + 0.5 * lips[i] * h
        upper = max(upper, cell_up, float(np.max(vals)))
    return SupBracket(float(lower), float(upper))


def in_level(f: ScalarFn, n: int, refinement: int = 257, tol: float = 1e-12) -> bool:
    """Check the three defining clauses of V_n on a breakpoint-refined grid."""
    if f.constant != 0 or not f.is_real(tol):
        return False
    sup = f.support
    if sup is not None and (sup[0] < -n - 1 - tol or sup[1] > n + 1 + tol):
        return False
    nb = _union_breaks(f.breakpoints(), [-n - 1.0, -n, n, n + 1.0])
    grid = np.unique(np.concatenate([np.linspace(a, b, refinement) for a, b in zip(nb[:-1], nb[1:])]))
    vals = f(grid).real
    if np.any(vals < -tol) or np.any(vals > 1 + tol):
        return False
    plateau = grid[(grid >= -n) & (grid <= n)]
    return bool(np.all(np.abs(f(plateau).real - 1.0) <= tol))
