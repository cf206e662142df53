import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabtensor.errors import DegreeOverflowError, InvalidLevelError, UnsupportedModulationError
from stabtensor.fnalg import (ONE, ZERO, PiecewisePoly, ScalarFn, bump_power, conj, in_level, make_bump,
                              modulate, multiply, sup_norm_bound)
from stabtensor.randgen import random_slot


def trapezoid(n, t):
    """Independent closed form of the level-n bump."""
    return np.clip(n + 1 - np.abs(t), 0.0, 1.0)


# make_bump

@pytest.mark.parametrize("t, want", [(0.0, 1.0), (1.5, 0.5), (3.0, 0.0), (-1.5, 0.5), (-2.0, 0.0)])
def test_bump_values(t, want):
    assert make_bump(1)(t) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 5, 17])
def test_bump_matches_closed_form(n):
    t = np.linspace(-n - 3, n + 3, 2001)
    assert np.allclose(make_bump(n)(t).real, trapezoid(n, t), atol=1e-14)
    assert in_level(make_bump(n), n)


@pytest.mark.parametrize("bad", [0, -3])
def test_bump_rejects_level(bad):
    with pytest.raises(InvalidLevelError):
        make_bump(bad)


# multiply

@pytest.mark.parametrize("n, m", [(1, 2), (2, 7), (3, 4), (1, 20)])
def test_semigroup_normal_form(n, m):
    prod = make_bump(n) * make_bump(m)
    assert prod.allclose(make_bump(n))
    assert prod.key() == make_bump(n).key()


def test_unit_and_square():
    f = random_slot(np.random.default_rng(1))
    assert (f * ONE).allclose(f)
    assert (make_bump(1) * make_bump(1))(1.5) == pytest.approx(0.25, abs=1e-15)
    assert multiply(f, ZERO).is_zero()


def test_degree_cap():
    with pytest.raises(DegreeOverflowError):
        bump_power(1, 17)
    f = bump_power(1, 9)
    with pytest.raises(DegreeOverflowError):
        f * f


def test_product_pointwise(rng):
    for _ in range(20):
        f, g = random_slot(rng, max_terms=3), random_slot(rng, max_terms=3)
        t = rng.uniform(-7, 7, 1000)
        assert np.allclose((f * g)(t), f(t) * g(t), rtol=1e-12, atol=1e-12)


def test_product_at_breakpoints(rng):
    f, g = random_slot(rng), random_slot(rng)
    t = np.union1d(f.breakpoints(), g.breakpoints())
    assert np.allclose((f * g)(t), f(t) * g(t), atol=1e-12)


# conj / modulate

def test_conj_examples():
    b = make_bump(2)
    assert conj(b).allclose(b)
    mod = modulate(0.8, b)
    assert conj(mod).allclose(modulate(-0.8, b))
    assert conj(b.scale(1j)).allclose(b.scale(-1j))


def test_modulate_examples():
    f = make_bump(3)
    assert modulate(0.0, f).allclose(f)
    assert modulate(0.4, modulate(-1.1, f)).allclose(modulate(0.4 - 1.1, f))
    assert modulate(math.pi, make_bump(1))(0.5) == pytest.approx(1j, abs=1e-15)


def test_modulate_rejects_constant():
    with pytest.raises(UnsupportedModulationError):
        modulate(1.0, ONE + make_bump(1))


# sup norm

def test_sup_norm_examples():
    assert sup_norm_bound(make_bump(3)) == (1.0, 1.0)
    assert sup_norm_bound(ZERO) == (0.0, 0.0)


def test_sup_norm_wave_bracket():
    # (e^{it} - 1) * bump_1, dense-grid oracle on the support
    f = modulate(1.0, make_bump(1)) - make_bump(1)
    t = np.linspace(-2, 2, 400001)
    oracle = np.max(np.abs((np.exp(1j * t) - 1) * trapezoid(1, t)))
    lo, hi = sup_norm_bound(f, 10 ** 4)
    assert lo <= oracle + 1e-12 and oracle <= hi
    assert hi - lo < 1e-3
    assert oracle == pytest.approx(2 * math.sin(0.5), abs=1e-9)


def test_sup_norm_shrinks(rng):
    f = random_slot(rng, max_terms=3)
    coarse = sup_norm_bound(f, 8)
    fine = sup_norm_bound(f, 512)
    assert fine.upper - fine.lower <= coarse.upper - coarse.lower + 1e-12


# PiecewisePoly

def test_pp_breaks_must_increase():
    with pytest.raises(ValueError):
        PiecewisePoly([0.0, 0.0, 1.0], np.ones((2, 1)))


def test_pp_integral_against_quadrature():
    from scipy.integrate import quad
    env = bump_power(2, 3)._parts[0][1]
    want = quad(lambda t: trapezoid(2, t) ** 3, -3, 3, points=[-2, 2])[0]
    assert env.integral() == pytest.approx(want, abs=1e-12)


def test_json_roundtrip(rng):
    f = random_slot(rng, max_terms=3) + ScalarFn(0.25)
    assert ScalarFn.from_json(f.to_json()).allclose(f)


# properties

slots = st.builds(lambda s: random_slot(np.random.default_rng(s), max_terms=3), st.integers(0, 2 ** 32 - 1))


@settings(max_examples=60, deadline=None)
@given(slots, slots, slots)
def test_ring_laws(f, g, h):
    assert (f * g).allclose(g * f)
    assert ((f * g) * h).allclose(f * (g * h))
    assert (f * (g + h)).allclose(f * g + f * h)


@settings(max_examples=60, deadline=None)
@given(slots, slots)
def test_conj_involutive_multiplicative(f, g):
    assert f.conj().conj().allclose(f)
    assert (f * g).conj().allclose(f.conj() * g.conj())


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12))
def test_bump_products_stay_in_level(n, m):
    n, m = min(n, m), max(n, m)
    assert in_level(make_bump(n) * make_bump(m), n)


@settings(max_examples=40, deadline=None)
@given(slots, st.integers(0, 2 ** 32 - 1))
def test_sup_bracket_contains_samples(f, seed):
    t = np.random.default_rng(seed).uniform(-7, 7, 2000)
    lo, hi = sup_norm_bound(f, 32)
    assert np.max(np.abs(f(t))) <= hi + 1e-12
    assert lo <= hi
