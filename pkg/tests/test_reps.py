import numpy as np
import pytest
from scipy import integrate, stats

from stabtensor import pipeline
from stabtensor.chars import Character, InPlateau, PointSeq, ProductState, RampOffset
from stabtensor.fnalg import ONE, make_bump
from stabtensor.measures import Gaussian, ProductMeasure, Uniform
from stabtensor.randgen import random_homogeneous, random_slot
from stabtensor.reps import (F_elem, F_partials, P_elem, VecElem, excess_elem, excess_semigroup_check, inner,
                             matrix_element, piQ_eval, vn_equiv)
from stabtensor.tensor import UNIT_TAIL, ElemTensor, TailClass, TensorElem, constant_seq, periodic_seq

GAUSS = ProductMeasure.iid(Gaussian(1.0))
OMEGA = VecElem.omega(GAUSS)
F_SEL = pipeline.choose_f(ProductState(GAUSS), 64)


def quad_bump(k, sigma=1.0):
    pdf = stats.norm(scale=sigma).pdf
    return integrate.quad(lambda t: np.clip(k + 1 - abs(t), 0, 1) * pdf(t), -k - 1, k + 1,
                          points=[-k, k], epsabs=1e-14)[0]


def random_vec(rng, mu=GAUSS):
    terms = []
    for _ in range(int(rng.integers(1, 3))):
        slots = {int(n): random_slot(rng) + ONE.scale(complex(rng.normal(), rng.normal()))
                 for n in rng.choice(np.arange(1, 5), int(rng.integers(0, 3)), replace=False)}
        terms.append((complex(rng.normal(), rng.normal()), slots))
    return VecElem(terms, mu)


def test_vacuum_norm():
    b = inner(OMEGA, OMEGA)
    assert b.value == 1 and b.radius == 0


def test_vacuum_tail_expectation():
    b = matrix_element(OMEGA, TensorElem.pure_tail(F_SEL), OMEGA, depth=64)
    oracle = np.prod([quad_bump(F_SEL.level(j)) for j in range(1, 65)])
    assert 2 * b.radius < 1e-3
    assert b.contains(oracle, 1e-10)


def test_cauchy_schwarz(rng):
    for _ in range(200):
        u, v = random_vec(rng), random_vec(rng)
        uv, uu, vv = inner(u, v), inner(u, u), inner(v, v)
        slack = 2 * abs(uv.value) * uv.radius + uu.radius * abs(vv.value) + vv.radius * abs(uu.value) + 1e-9
        assert abs(uv.value) ** 2 <= uu.value.real * vv.value.real + slack


def test_inner_is_hermitian(rng):
    u, v = random_vec(rng), random_vec(rng)
    assert inner(u, v).value == pytest.approx(inner(v, u).value.conjugate(), abs=1e-12)
    assert inner(u, u).value.imag == pytest.approx(0.0, abs=1e-12)


def test_modulated_vacuum_gives_characteristic_function():
    v = VecElem([(1.0, {1: make_bump(3), 2: make_bump(3)})], GAUSS).modulate({1: 0.8})
    want = (integrate.quad(lambda t: np.cos(0.8 * t) * np.clip(4 - abs(t), 0, 1) * stats.norm.pdf(t), -4, 4)[0]
            * quad_bump(3))
    assert matrix_element(OMEGA, ElemTensor(UNIT_TAIL), v).value == pytest.approx(want, abs=1e-10)


def test_vn_equivalence():
    omega = ElemTensor(UNIT_TAIL)
    assert vn_equiv(omega, omega, GAUSS).verdict == "convergent"
    assert vn_equiv(omega, ElemTensor(TailClass([(F_SEL, 1)])), GAUSS).verdict == "convergent"
    assert vn_equiv(omega, ElemTensor(TailClass([(constant_seq(1), 1)])), GAUSS).verdict == "divergent"


def test_F_partials_monotone():
    vals = F_partials(2, 1, F_SEL, OMEGA, OMEGA, [2, 4, 8, 16, 32, 64])
    assert all(b.real <= a.real + 1e-12 for a, b in zip(vals, vals[1:]))
    oracle = np.prod([quad_bump(F_SEL.level(j)) for j in range(2, 17)])
    assert vals[3].real == pytest.approx(oracle, abs=1e-10)
    ks = [F_elem(k, 1, F_SEL, OMEGA, OMEGA).value.real for k in range(1, 11)]
    assert all(b >= a - 1e-12 for a, b in zip(ks, ks[1:]))
    assert all(-1e-12 <= v <= 1 + 1e-12 for v in ks)


def test_F_on_uniform_is_one():
    mu = ProductMeasure.iid(Uniform(-1, 1))
    om = VecElem.omega(mu)
    assert all(v == pytest.approx(1.0, abs=1e-14) for v in F_partials(1, 2, constant_seq(1), om, om, [1, 5, 30]))
    assert F_elem(3, 1, constant_seq(2), om, om).contains(1.0, 1e-14)


def test_constant_level_one_collapses():
    f = constant_seq(1)
    b = F_elem(1, 1, f, OMEGA, OMEGA)
    assert b.contains(0.0, 1e-12)
    assert P_elem(f, OMEGA, OMEGA).contains(0.0, 1e-12)
    rate = quad_bump(1)
    assert F_partials(1, 1, f, OMEGA, OMEGA, [10])[0].real == pytest.approx(rate ** 10, rel=1e-9)


def test_P_selected_is_one():
    for ell in (1, 2, 3):
        p = P_elem(F_SEL, OMEGA, OMEGA, 64, ell, 64)
        assert p.contains(1.0) and 2 * p.radius < 1e-3


def test_excess_characters():
    for q in (0.2, 0.9):
        c = Character(PointSeq({2: 5.0}), q, F_SEL)
        for ell in (1, 2, 3):
            assert excess_elem(F_SEL, c, ell=ell).value == q ** ell
    nf = Character(PointSeq((), RampOffset(F_SEL, 1.5)), 0.5, F_SEL)
    assert excess_elem(F_SEL, nf).value == 0


def test_excess_semigroup_product_measure():
    for f, g in [(F_SEL, F_SEL), (F_SEL, constant_seq(3)), (constant_seq(1), F_SEL), (constant_seq(2), constant_seq(5))]:
        chk = excess_semigroup_check(f, g, GAUSS)
        assert chk.passed and chk.residual <= 1e-6


def test_excess_semigroup_character():
    c = Character(PointSeq({1: 3.0}, InPlateau(0.5)), 1.0, F_SEL)
    chk = excess_semigroup_check(F_SEL, constant_seq(2), c)
    assert chk.passed and chk.residual == 0
    with pytest.raises(ValueError):
        excess_semigroup_check(F_SEL, F_SEL, Character(PointSeq(), 0.5, F_SEL))


def test_piQ_paths_agree(rng):
    f = periodic_seq("p", [2, 3])
    mu = ProductMeasure.iid(Uniform(-2, 2))
    for _ in range(10):
        A = random_homogeneous(rng, f)
        u, v = random_vec(rng, mu), random_vec(rng, mu)
        q = float(rng.uniform(0.1, 1))
        w = piQ_eval(A, f, q, u, v, path="window")
        lim = piQ_eval(A, f, q, u, v, path="limit")
        assert abs(w.value - lim.value) <= w.radius + lim.radius + 1e-9
    with pytest.raises(ValueError):
        piQ_eval(A, f, 0.5, u, v, path="other")
