import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabtensor.errors import WindowTooSmallError
from stabtensor.fnalg import make_bump, modulate, sup_norm_bound
from stabtensor.randgen import default_seqs, random_homogeneous, random_support, random_tensor
from stabtensor.tensor import (ElemTensor, TailClass, TensorElem, UNIT_TAIL, adjoint, constant_seq,
                               cross_norm_upper, equivalent, eta_act, mul, periodic_seq, regroup_check,
                               tail_polynomial, window_project)

F = periodic_seq("f", [1, 2, 3])
G = periodic_seq("g", [2], prefix=[1])


def tail(seq=F, e=1):
    return TailClass([(seq, e)])


def test_tail_classes_multiply():
    a = TensorElem.elem(tail(), {1: make_bump(4)})
    b = TensorElem.elem(tail(), {3: modulate(0.5, make_bump(1))})
    for t in mul(a, b).terms:
        assert t.tail.power_of(F) == 2


def test_product_of_tails_slotwise():
    fn, fm = constant_seq(2, "n"), constant_seq(5, "m")
    prod = ElemTensor(tail(fn), {}) * ElemTensor(tail(fm), {})
    for j in range(1, 6):
        assert prod.slot(j).allclose(make_bump(2))
        assert prod.slot(j).allclose(fn.slot(j) * fm.slot(j))


def test_zero_annihilates(rng):
    a = random_tensor(rng)
    assert mul(a, TensorElem.zero()).is_zero()


def test_adjoint_examples(rng):
    a = random_tensor(rng)
    assert adjoint(adjoint(a)).allclose(a)
    w = TensorElem.elem(tail(), {2: modulate(1.3, make_bump(2))})
    want = TensorElem.elem(tail(), {2: modulate(-1.3, make_bump(2))})
    assert adjoint(w).allclose(want)


def test_deviation_equal_to_tail_slot_is_absorbed():
    # slot 2 of F is bump_2, so writing it out does not create a deviation
    t = ElemTensor(tail(), {2: make_bump(2).scale(3.0)})
    assert t.devs == () and t.coeff == pytest.approx(3.0)


def test_equivalence():
    x = ElemTensor(tail(), {1: make_bump(5)})
    y = ElemTensor(tail(), {4: modulate(2.0, make_bump(1))})
    assert equivalent(x, y)
    assert equivalent(x, x)
    assert not equivalent(x, ElemTensor(tail(F, 2), {1: make_bump(5)}))
    # f and f^2 differ at every ramp point, on every slot
    for j in range(1, 7):
        lvl = F.level(j)
        t = lvl + 0.5
        assert F.slot(j)(t) != F.slot(j, 2)(t)


def test_window_project():
    a1, a2 = modulate(0.3, make_bump(4)), make_bump(7)
    a = TensorElem.elem(tail(), {1: a1, 2: a2})
    w = window_project(a, tail(), [1, 2])
    pts = {1: 0.4, 2: -1.7}
    assert w.evaluate(pts) == pytest.approx(a1(0.4) * a2(-1.7), abs=1e-14)
    assert window_project(a, tail(G), [1, 2]).elem.is_zero()
    pure = TensorElem.pure_tail(F, 1, coeff=2.5)
    assert window_project(pure, tail(), []).scalar() == pytest.approx(2.5)
    with pytest.raises(WindowTooSmallError):
        window_project(a, tail(), [1])


def test_regroup_examples(rng):
    for _ in range(30):
        a, b = random_tensor(rng), random_tensor(rng)
        assert regroup_check(a, b, 3)
        assert regroup_check(a, b, 12)


def test_eta_examples(rng):
    a = random_tensor(rng)
    assert eta_act({}, a).allclose(a)
    x, y = random_support(rng), random_support(rng)
    s = {k: x.get(k, 0.0) + y.get(k, 0.0) for k in set(x) | set(y)}
    assert eta_act(x, eta_act(y, a)).allclose(eta_act(s, a))
    b = random_tensor(rng)
    prod = mul(eta_act(x, a), eta_act({k: -v for k, v in x.items()}, b))
    assert {t.tail.key for t in prod.terms} <= {t.tail.key for t in mul(a, b).terms}


def test_cross_norm_examples():
    t = TensorElem.elem(tail(), {1: make_bump(3), 4: make_bump(1)}, coeff=-2j)
    assert cross_norm_upper(t) == pytest.approx(2.0)
    assert cross_norm_upper(TensorElem.zero()) == 0.0


def test_eta_continuity_bound_decays():
    # (eta(x) - 1) a written as a telescoping sum over the modulated slots
    L1, L2 = make_bump(1), make_bump(2)
    a = TensorElem.elem(tail(), {1: L1, 2: L2})
    prev = np.inf
    for x in (1.0, 0.1, 0.01, 0.001):
        d1 = modulate(x, L1) - L1
        d2 = modulate(-x, L2) - L2
        tele = (TensorElem.elem(tail(), {1: d1, 2: modulate(-x, L2)})
                + TensorElem.elem(tail(), {1: L1, 2: d2}))
        direct = eta_act({1: x, 2: -x}, a) - a
        wt, wd = window_project(tele, tail(), [1, 2]), window_project(direct, tail(), [1, 2])
        for p in np.random.default_rng(0).uniform(-4, 4, (20, 2)):
            pts = {1: p[0], 2: p[1]}
            assert wt.evaluate(pts) == pytest.approx(wd.evaluate(pts), abs=1e-13)
        bound = cross_norm_upper(tele, 512)
        rate = (sup_norm_bound(d1, 512).upper * sup_norm_bound(modulate(-x, L2), 512).upper
                + sup_norm_bound(d2, 512).upper)
        assert bound <= rate + 1e-9 and bound < prev
        prev = bound
    assert prev < 0.01


def test_tail_polynomial():
    p = tail_polynomial(F, [0, 1, -1])
    assert {t.tail.power_of(F): t.coeff for t in p.terms} == {1: 1, 2: -1}
    with pytest.raises(ValueError):
        tail_polynomial(F, [1, 1])


def test_json_roundtrip(rng):
    a = random_tensor(rng)
    assert TensorElem.from_json(a.to_json()).allclose(a)


def test_window_product_of_units():
    u = TensorElem.unit(2.0)
    assert mul(u, u).allclose(TensorElem.unit(4.0))
    assert UNIT_TAIL.is_unit


seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_algebra_laws(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_tensor(rng) for _ in range(3))
    assert mul(a, b).allclose(mul(b, a))
    assert mul(mul(a, b), c).allclose(mul(a, mul(b, c)))
    assert mul(a, b + c).allclose(mul(a, b) + mul(a, c))
    assert adjoint(mul(a, b)).allclose(mul(adjoint(a), adjoint(b)))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_grading(seed, k, ell):
    rng = np.random.default_rng(seed)
    seq = default_seqs()[0]
    a, b = random_homogeneous(rng, seq, k), random_homogeneous(rng, seq, ell)
    assert all(t.tail.power_of(seq) == k + ell for t in mul(a, b).terms)
