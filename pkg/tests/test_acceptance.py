"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the terminal
summary (see conftest.py).
"""
import math
import time

import numpy as np

from stabtensor import pipeline
from stabtensor.chars import (Character, InPlateau, NON_STATE_POINTS, PointSeq, ProductState, char_eval,
                              char_sup_lower, cosine_non_state, psd_check, q_grid_characters, state_eval)
from stabtensor.cli import SUBCOMMANDS, main
from stabtensor.fnalg import make_bump
from stabtensor.measures import Gaussian, PowerBudget, ProductMeasure, Uniform
from stabtensor.randgen import default_seqs, random_homogeneous, random_tensor
from stabtensor.reps import (F_elem, F_partials, P_elem, VecElem, excess_elem, excess_semigroup_check,
                             piQ_eval)
from stabtensor.tensor import (TensorElem, adjoint, constant_seq, cross_norm_upper, mul, periodic_seq,
                               tail_polynomial)

from conftest import record

GAUSS = ProductMeasure.iid(Gaussian(1.0))
STATE = ProductState(GAUSS)


def test_01_bump_semigroup():
    rng = np.random.default_rng(1)
    pairs = []
    while len(pairs) < 200:
        n, m = sorted(int(v) for v in rng.integers(1, 21, 2))
        if n < m:
            pairs.append((n, m))
    t0 = time.perf_counter()
    bad = sum(not ((make_bump(n) * make_bump(m)).allclose(make_bump(n), 1e-12)
                   and (make_bump(n) * make_bump(m)).key() == make_bump(n).key()) for n, m in pairs)
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 1.0
    record(1, "bump semigroup", ok, f"{bad} failures in 200 pairs, {dt:.3f}s (< 1s)")
    assert ok


def test_02_algebra_laws():
    rng = np.random.default_rng(2)
    seqs = default_seqs()
    triples = [tuple(random_tensor(rng, seqs, max_terms=2) for _ in range(3)) for _ in range(500)]
    graded = [(random_homogeneous(rng, seqs[0]), random_homogeneous(rng, seqs[0])) for _ in range(500)]
    t0 = time.perf_counter()
    bad = 0
    for (a, b, c), (ha, hb) in zip(triples, graded):
        ab = mul(a, b)
        bad += not ab.allclose(mul(b, a), 1e-12)
        bad += not mul(ab, c).allclose(mul(a, mul(b, c)), 1e-12)
        bad += not adjoint(ab).allclose(mul(adjoint(a), adjoint(b)), 1e-12)
        bad += not adjoint(adjoint(a)).allclose(a, 1e-12)
        want = ha.terms[0].tail.power_of(seqs[0]) + hb.terms[0].tail.power_of(seqs[0])
        bad += not all(t.tail.power_of(seqs[0]) == want for t in mul(ha, hb).terms)
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 10.0
    record(2, "algebra laws", ok, f"{bad} failures in 500 pairs, {dt:.2f}s (< 10s)")
    assert ok


def test_03_character_multiplicativity():
    rng = np.random.default_rng(3)
    f = default_seqs()[0]
    worst = 0.0
    for _ in range(500):
        a, b = random_homogeneous(rng, f), random_homogeneous(rng, f)
        devs = {int(n): float(rng.uniform(-4, 4)) for n in rng.integers(1, 6, 2)}
        c = Character(PointSeq(devs, InPlateau(float(rng.uniform(-1, 1)))), float(rng.uniform(0.01, 1)), f)
        worst = max(worst, abs(char_eval(c, mul(a, b)) - char_eval(c, a) * char_eval(c, b)))
    exact = all(char_eval(Character(PointSeq(), q, f), TensorElem.pure_tail(f, ell)) == q ** ell
                for q in (0.1, 0.37, 0.5, 1.0) for ell in (1, 2, 3, 4))
    ok = worst <= 1e-9 and exact
    record(3, "character multiplicativity", ok, f"max residual {worst:.2e} (<= 1e-9), pure tails exact: {exact}")
    assert ok


def test_04_bochner_transform():
    rng = np.random.default_rng(4)
    points = [np.round(rng.normal(size=int(rng.integers(1, 9))), 4) for _ in range(10)]
    t0 = time.perf_counter()
    closed = max(abs(state_eval(STATE, x) - math.exp(-0.5 * float(np.sum(x * x)))) for x in points)
    rows = pipeline.mc_verify(STATE, points, 10 ** 5, seed=0)
    mc = max(abs(r.closed - r.estimate) for r in rows)
    dt = time.perf_counter() - t0
    ok = closed <= 1e-8 and mc <= 0.02 and dt < 30
    record(4, "Bochner transform", ok, f"closed-form err {closed:.1e} (<= 1e-8), MC err {mc:.4f} (<= 0.02), {dt:.2f}s")
    assert ok


def test_05_level_selection_and_tail():
    f = pipeline.choose_f(STATE, 200)
    budget = PowerBudget(4.0)
    deficits = np.array([GAUSS[n].deficit(k) for n, k in enumerate(f.rule.levels(200), start=1)])
    bounds = np.array([budget(n) for n in range(1, 201)])
    series_ok = bool(np.all(np.cumsum(deficits) <= np.cumsum(bounds)))
    rows = pipeline.verify_tail(f, STATE, range(2, 11), 200, tol=1e-8)
    tail_ok = all(r.residual <= 1.0 / (r.k - 1) + 1e-8 for r in rows)
    worst = max(r.residual * (r.k - 1) for r in rows)
    ok = series_ok and tail_ok
    record(5, "level selection / tail bound", ok,
           f"deficit partial sums bounded: {series_ok}, max r_k*(k-1) = {worst:.2e} (<= 1)")
    assert ok


def test_06_monotone_limits():
    f = pipeline.choose_f(STATE, 64)
    om = VecElem.omega(GAUSS)
    Ns = [1, 2, 4, 8, 16, 32, 64]
    mono_N = True
    in_range = True
    for k in range(1, 11):
        vals = [v.real for v in F_partials(k, 1, f, om, om, [N for N in Ns if N >= k])]
        mono_N &= all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
        in_range &= all(-1e-12 <= v <= 1 + 1e-12 for v in vals)
    ks = [F_elem(k, 1, f, om, om).value.real for k in range(1, 11)]
    mono_k = all(b >= a - 1e-12 for a, b in zip(ks, ks[1:]))
    Ps = [P_elem(f, om, om, 64, ell, 64) for ell in (1, 2, 3)]
    indep = all(abs(p.value - Ps[0].value) <= p.radius + Ps[0].radius for p in Ps)
    one = all(p.contains(1.0) and 2 * p.radius <= 1e-3 for p in Ps)
    ok = mono_N and mono_k and in_range and indep and one
    record(6, "monotone operator limits", ok,
           f"nonincreasing in N: {mono_N}, nondecreasing in k: {mono_k}, in [0,1]: {in_range}, "
           f"P ell-independent: {indep}, P=1 width {2 * Ps[0].radius:.1e} (<= 1e-3)")
    assert ok


def test_07_excess_calculus():
    rng = np.random.default_rng(7)
    f = pipeline.choose_f(STATE, 64)
    power = True
    for q in (0.1, 0.5, 0.9, 1.0):
        c = Character(PointSeq({1: 2.5}), q, f)
        power &= all(excess_elem(f, c, ell=ell).value == q ** ell for ell in (1, 2, 3))
    seqs = [f, constant_seq(1), constant_seq(2), constant_seq(4), periodic_seq("p", [1, 6]),
            periodic_seq("s", [3], prefix=[1, 1])]
    pairs = [(seqs[i], seqs[j]) for i in range(len(seqs)) for j in range(i, len(seqs))][:20]
    kinds = set()
    worst = 0.0
    for g, h in pairs:
        chk = excess_semigroup_check(g, h, GAUSS)
        worst = max(worst, chk.residual if chk.passed else math.inf)
        kinds.add(chk.rhs.value.real > 0.5)
    spans = kinds == {True, False}
    mu = ProductMeasure.iid(Uniform(-2, 2))
    base = periodic_seq("b", [2, 3])
    agree = 0
    for _ in range(100):
        A = random_homogeneous(rng, base)
        u = VecElem([(1.0, {1: make_bump(1).scale(complex(rng.normal(), rng.normal()))})], mu)
        v = VecElem.omega(mu)
        q = float(rng.uniform(0.05, 1))
        w, lim = piQ_eval(A, base, q, u, v, path="window"), piQ_eval(A, base, q, u, v, path="limit")
        agree += abs(w.value - lim.value) <= w.radius + lim.radius + 1e-12
    ok = power and worst <= 1e-6 and spans and len(pairs) == 20 and agree == 100
    record(7, "excess calculus", ok,
           f"q^ell exact: {power}, semigroup max residual {worst:.1e} (<= 1e-6) over {len(pairs)} pairs "
           f"(summable and divergent: {spans}), piQ agreement {agree}/100")
    assert ok


def test_08_positive_definiteness():
    rng = np.random.default_rng(8)
    pts = [rng.normal(size=int(rng.integers(1, 9))) for _ in range(20)]
    eig = psd_check(STATE, pts)
    ctr = psd_check(cosine_non_state, NON_STATE_POINTS)
    ok = eig >= -1e-8 and ctr < -1e-3
    record(8, "positive definiteness", ok, f"state min eig {eig:.3e} (>= -1e-8), non-state {ctr:.3f} (< -1e-3)")
    assert ok


def test_09_norm_sandwich():
    f = pipeline.choose_f(STATE, 64)
    grid = q_grid_characters(f, 1000)
    p = tail_polynomial(f, [0, 1, -1])
    lower = char_sup_lower(p, grid)
    upper = cross_norm_upper(p)
    everywhere = all(abs(char_eval(c, p)) <= upper for c in grid)
    ok = abs(lower - 0.25) <= 1e-6 and lower <= upper and everywhere
    record(9, "norm sandwich", ok, f"char_sup_lower {lower:.9f} (0.25 +- 1e-6), cross_norm_upper {upper:.3f}")
    assert ok


def test_10_cli_determinism(tmp_path):
    same = True
    codes = []
    for sub in SUBCOMMANDS:
        a, b = tmp_path / sub / "a", tmp_path / sub / "b"
        codes += [main([sub, "--out", str(a)]), main([sub, "--out", str(b)])]
        names = sorted(p.name for p in a.iterdir())
        same &= bool(names) and names == sorted(p.name for p in b.iterdir())
        same &= all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    ok = same and all(c == 0 for c in codes)
    record(10, "CLI determinism", ok, f"byte-identical reruns of {len(SUBCOMMANDS)} subcommands: {same}, exit codes {set(codes)}")
    assert ok
