"""One-dimensional probability measures and product measures on R^N.

Integrals of normal-form functions are computed panel by panel with
Gauss-Legendre rules of two orders; the difference of the two estimates is
the reported error and drives bisection.  Panels always start at envelope
breakpoints, so every integrand is smooth on every panel.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special

from . import kernels
from .errors import HeavyTailError, QuadratureError
from .fnalg import PiecewisePoly, ScalarFn, bump_power

_GL16 = tuple(np.ascontiguousarray(a) for a in np.polynomial.legendre.leggauss(16))
_GL32 = tuple(np.ascontiguousarray(a) for a in np.polynomial.legendre.leggauss(32))


@dataclass(frozen=True)
class QuadratureCfg:
    abs_tol: float = 1e-10
    truncation_sigmas: float = 8.0
    max_subdivisions: int = 4000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.truncation_sigmas <= 0 or self.max_subdivisions < 1:
            raise ValueError("truncation radius and subdivision cap must be positive")


DEFAULT_QUAD = QuadratureCfg()


class QuadResult(NamedTuple):
    value: complex
    error: float


def _oscillatory(env: PiecewisePoly, omega: float, sigma: float, lo: float, hi: float,
                 cfg: QuadratureCfg, tol: float) -> QuadResult:
    """int env(t) exp(i omega t) w(t) dt over [lo, hi]; w is N(0, sigma^2) or 1."""
    if env.is_zero():
        return QuadResult(0j, 0.0)
    nb = env.breaks
    cells = np.clip(nb, lo, hi)
    keep = np.diff(cells) > 0
    if not np.any(keep):
        return QuadResult(0j, 0.0)
    coeffs = env.coeffs[keep]
    origin = nb[:-1][keep]
    left = cells[:-1][keep]
    right = cells[1:][keep]
    if omega == 0.0 and sigma == 0.0:
        return QuadResult(complex(env._clip(lo, hi).integral()), 0.0)
    total = 0j
    err = 0.0
    used = 0
    while left.size:
        c = np.ascontiguousarray(coeffs)
        r16, i16 = kernels.gl_panels(c, origin, left, right, omega, sigma, *_GL16)
        r32, i32 = kernels.gl_panels(c, origin, left, right, omega, sigma, *_GL32)
        g16 = np.asarray(r16) + 1j * np.asarray(i16)
        g32 = np.asarray(r32) + 1j * np.asarray(i32)
        diff = np.abs(g32 - g16)
        share = tol * (right - left) / max(hi - lo, 1e-300)
        done = diff <= np.maximum(share, 1e-17)
        total += complex(np.sum(g32[done]))
        err += float(np.sum(diff[done]))
        used += left.size
        if np.all(done):
            break
        if used > cfg.max_subdivisions:
            total += complex(np.sum(g32[~done]))
            err += float(np.sum(diff[~done]))
            raise QuadratureError(
                f"tolerance {tol:g} not reached within {cfg.max_subdivisions} panels",
                estimate=total, bound=err)
        mid = 0.5 * (left[~done] + right[~done])
        coeffs = np.concatenate([coeffs[~done], coeffs[~done]])
        origin = np.concatenate([origin[~done], origin[~done]])
        left, right = np.concatenate([left[~done], mid]), np.concatenate([mid, right[~done]])
    return QuadResult(total, err)


def _integrate_lebesgue(f: ScalarFn, density: PiecewisePoly, cfg: QuadratureCfg) -> QuadResult:
    lo, hi = density.support
    value = f.constant * density.integral()
    err = 0.0
    nparts = max(1, 2 * len(f.frequencies))
    for w, re, im in f._parts:
        for env, unit in ((re, 1.0), (im, 1j)):
            if env.is_zero():
                continue
            r = _oscillatory(env.mul(density, cap=None), w, 0.0, lo, hi, cfg, cfg.abs_tol / nparts)
            value += unit * r.value
            err += r.error
    return QuadResult(complex(value), err)


class Measure1D:
    """Base class: probability measure on the real line."""

    def integrate(self, f: ScalarFn, cfg: QuadratureCfg = DEFAULT_QUAD) -> QuadResult:
        raise NotImplementedError

    def char_fn(self, x: float) -> complex:
        raise NotImplementedError

    def plateau_mass(self, k: float) -> float:
        return 1.0 - self.deficit(k)

    def deficit(self, k: float) -> float:
        """1 - mu([-k, k]), computed without cancellation where possible."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def bump_integral(self, k: int, power: int = 1) -> float:
        """Cached real integral of the level-k bump raised to ``power``."""
        return _bump_integral(self, int(k), int(power))


@lru_cache(maxsize=65536)
def _bump_integral(mu: Measure1D, k: int, power: int) -> float:
    return mu.integrate(bump_power(k, power)).value.real


@dataclass(frozen=True)
class Gaussian(Measure1D):
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def integrate(self, f: ScalarFn, cfg: QuadratureCfg = DEFAULT_QUAD) -> QuadResult:
        radius = cfg.truncation_sigmas * self.sigma
        tail = float(special.erfc(cfg.truncation_sigmas / math.sqrt(2.0)))
        value = complex(f.constant)
        err = 0.0
        nparts = max(1, 2 * len(f.frequencies))
        for w, re, im in f._parts:
            for env, unit in ((re, 1.0), (im, 1j)):
                if env.is_zero():
                    continue
                r = _oscillatory(env, w, self.sigma, -radius, radius, cfg, 0.5 * cfg.abs_tol / nparts)
                value += unit * r.value
                sup = float(np.max(env.piece_abs_bounds()))
                err += r.error + sup * tail
        if err > cfg.abs_tol:
            raise QuadratureError(f"error bound {err:g} exceeds abs_tol {cfg.abs_tol:g}", value, err)
        return QuadResult(value, err)

    def char_fn(self, x: float) -> complex:
        return complex(math.exp(-0.5 * (self.sigma * x) ** 2))

    def deficit(self, k: float) -> float:
        if k <= 0:
            return 1.0
        return float(special.erfc(k / (self.sigma * math.sqrt(2.0))))

    def sample(self, rng, count):
        return rng.normal(0.0, self.sigma, count)

    def to_json(self) -> dict:
        return {"kind": "gaussian", "sigma": self.sigma}


@dataclass(frozen=True)
class Uniform(Measure1D):
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("uniform measure needs a < b")

    @property
    def density(self) -> PiecewisePoly:
        return PiecewisePoly.constant_on(self.a, self.b, 1.0 / (self.b - self.a))

    def integrate(self, f: ScalarFn, cfg: QuadratureCfg = DEFAULT_QUAD) -> QuadResult:
        return _integrate_lebesgue(f, self.density, cfg)

    def char_fn(self, x: float) -> complex:
        if x == 0.0:
            return 1.0 + 0j
        a, b = self.a, self.b
        return complex((np.exp(1j * x * b) - np.exp(1j * x * a)) / (1j * x * (b - a)))

    def deficit(self, k: float) -> float:
        inside = max(0.0, min(k, self.b) - max(-k, self.a))
        return max(0.0, 1.0 - inside / (self.b - self.a))

    def sample(self, rng, count):
        return rng.uniform(self.a, self.b, count)

    def to_json(self) -> dict:
        return {"kind": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True, eq=False)
class Density(Measure1D):
    """Measure with a nonnegative piecewise-polynomial density, normalized on construction."""

    pdf: PiecewisePoly
    _bound: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.pdf.is_zero():
            raise ValueError("density must be nonzero")
        lo, hi = self.pdf.support
        grid = np.linspace(lo, hi, 4097)
        if np.any(self.pdf(grid) < -1e-12):
            raise ValueError("density must be nonnegative")
        mass = self.pdf.integral()
        pdf = self.pdf.scale(1.0 / mass)
        object.__setattr__(self, "pdf", pdf)
        object.__setattr__(self, "_bound", float(np.max(pdf.piece_abs_bounds())))

    def __eq__(self, other):
        return isinstance(other, Density) and self.pdf == other.pdf

    def __hash__(self):
        return hash(("density", hash(self.pdf)))

    def integrate(self, f: ScalarFn, cfg: QuadratureCfg = DEFAULT_QUAD) -> QuadResult:
        return _integrate_lebesgue(f, self.pdf, cfg)

    def char_fn(self, x: float) -> complex:
        if x == 0.0:
            return 1.0 + 0j
        wave = ScalarFn(0.0, [(x, PiecewisePoly(self.pdf.support, [[1.0]]), 1.0)])
        return _integrate_lebesgue(wave, self.pdf, DEFAULT_QUAD).value

    def deficit(self, k: float) -> float:
        if k <= 0:
            return 1.0
        return max(0.0, 1.0 - self.pdf.integral_over(-k, k))

    def sample(self, rng, count):
        lo, hi = self.pdf.support
        out = np.empty(0)
        while out.size < count:
            need = count - out.size
            batch = max(64, 2 * need)
            t = rng.uniform(lo, hi, batch)
            u = rng.uniform(0.0, self._bound, batch)
            out = np.concatenate([out, t[u <= self.pdf(t)]])
        return out[:count]

    def to_json(self) -> dict:
        return {"kind": "density", "pdf": self.pdf.to_json()}


def measure_from_json(data: dict) -> Measure1D:
    kind = data.get("kind")
    if kind == "gaussian":
        return Gaussian(float(data.get("sigma", 1.0)))
    if kind == "uniform":
        return Uniform(float(data["a"]), float(data["b"]))
    if kind == "density":
        return Density(PiecewisePoly.from_json(data["pdf"]))
    raise ValueError(f"unknown measure kind {kind!r}")


def integrate(f: ScalarFn, mu: Measure1D, cfg: QuadratureCfg = DEFAULT_QUAD) -> QuadResult:
    return mu.integrate(f, cfg)


def char_fn(mu: Measure1D, x: float) -> complex:
    return mu.char_fn(x)


def plateau_mass(mu: Measure1D, k: float) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return mu.plateau_mass(k)


# ---------------------------------------------------------------------------
# product measures


@dataclass(frozen=True)
class ProductMeasure:
    """Coordinates 1..len(prefix) from ``prefix``, then ``period`` repeated forever."""

    prefix: tuple = ()
    period: tuple = (Gaussian(1.0),)

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.period:
            raise ValueError("period must be nonempty")

    @classmethod
    def iid(cls, mu: Measure1D) -> "ProductMeasure":
        return cls((), (mu,))

    def __getitem__(self, n: int) -> Measure1D:
        """Coordinate measure, 1-based."""
        if n < 1:
            raise IndexError("coordinates are 1-based")
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        return self.period[(n - len(self.prefix) - 1) % len(self.period)]

    coordinate = __getitem__

    @property
    def periodic_start(self) -> int:
        return len(self.prefix) + 1

    def to_json(self) -> dict:
        return {"prefix": [m.to_json() for m in self.prefix],
                "period": [m.to_json() for m in self.period]}

    @classmethod
    def from_json(cls, data: dict) -> "ProductMeasure":
        return cls(tuple(measure_from_json(m) for m in data.get("prefix", [])),
                   tuple(measure_from_json(m) for m in data["period"]))


class Budget:
    """Summable positive sequence n -> budget(n), n >= 1."""

    def __call__(self, n: int) -> float:
        raise NotImplementedError

    def tail(self, n: int) -> float:
        """Upper bound for sum_{j > n} budget(j)."""
        raise NotImplementedError

    def total(self) -> float:
        return self.tail(0)


@dataclass(frozen=True)
class GeometricBudget(Budget):
    ratio: float = 0.5

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")

    def __call__(self, n):
        return self.ratio ** n

    def tail(self, n):
        return self.ratio ** (n + 1) / (1.0 - self.ratio)


@dataclass(frozen=True)
class PowerBudget(Budget):
    p: float = 4.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("power must exceed 1")

    def __call__(self, n):
        return float(n) ** (-self.p)

    def tail(self, n):
        if n <= 0:
            return float(special.zeta(self.p))
        return float(n) ** (1.0 - self.p) / (self.p - 1.0)


LEVEL_CAP = 10 ** 6


@lru_cache(maxsize=65536)
def least_level(mu: Measure1D, eps: float, cap: int = LEVEL_CAP) -> int:
    """Least integer k >= 1 with deficit(k) <= eps."""
    if mu.deficit(1) <= eps:
        return 1
    hi = 2
    while mu.deficit(hi) > eps:
        if hi >= cap:
            raise HeavyTailError(f"no level <= {cap} brings the deficit below {eps:g}")
        hi = min(2 * hi, cap)
    lo = hi // 2  # deficit(lo) > eps
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mu.deficit(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def select_levels(mu: ProductMeasure, budget: Budget | None = None, depth: int = 64,
                  cap: int = LEVEL_CAP) -> list[int]:
    """Levels k_1..k_N, each the least with deficit at most budget(n)."""
    budget = budget or GeometricBudget()
    return [least_level(mu[n], budget(n), cap) for n in range(1, depth + 1)]


def coordinate_rng(seed: int, n: int) -> np.random.Generator:
    """Counter-based stream for coordinate ``n``; independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(n)])))


def sample(mu: ProductMeasure, depth: int, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """``count`` x ``depth`` matrix of i.i.d. draws; column n-1 follows mu_n."""
    if depth < 1 or count < 1:
        raise ValueError("depth and count must be >= 1")
    out = np.empty((count, depth))

    def fill(n):
        out[:, n - 1] = mu[n].sample(coordinate_rng(seed, n), count)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(1, depth + 1)))
    else:
        for n in range(1, depth + 1):
            fill(n)
    return out


def draw_point(mu: Measure1D, seed: int, n: int) -> float:
    """One draw from the stream of coordinate ``n``."""
    return float(mu.sample(coordinate_rng(seed, n), 1)[0])
