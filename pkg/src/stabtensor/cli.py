"""Command-line experiment driver.

Exit codes: 0 every check passed, 1 an invariant was violated, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from pathlib import Path

import numpy as np

from . import chars, pipeline, reps
from .chars import Character, PointSeq, ProductState
from .config import RunConfig, load_config, shipped_config
from .errors import ConfigError, StabTensorError
from .fnalg import make_bump
from .randgen import random_homogeneous, random_support, random_tensor, random_slot, default_seqs
from .tensor import TensorElem, adjoint, cross_norm_upper, eta_act, mul, regroup_check, tail_polynomial

SUBCOMMANDS = ("algebra-check", "bochner", "excess", "decompose", "spectrum")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _sequence(cfg: RunConfig):
    f = cfg.sequence()
    return f if f is not None else pipeline.choose_f(ProductState(cfg.measure), cfg.depth)


def _point(cfg: RunConfig, f) -> PointSeq:
    kind, _, arg = cfg.point.partition(":")
    v = float(arg) if arg else 0.0
    if kind == "plateau":
        return PointSeq((), chars.InPlateau(v))
    if kind == "ramp":
        return PointSeq((), chars.RampOffset(f, v))
    if kind == "constant":
        return PointSeq((), chars.Constant(v))
    return PointSeq((), chars.Sampled(cfg.measure, cfg.seed))


# ---------------------------------------------------------------------------


def run_algebra_check(cfg: RunConfig, out: Path) -> int:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.trials
    results = []

    fails = 0
    for _ in range(n):
        a = int(rng.integers(1, 20))
        b = int(rng.integers(a + 1, 21))
        fails += not (make_bump(a) * make_bump(b)).allclose(make_bump(a))
    results.append(("bump_semigroup", n, fails))

    fails = 0
    for _ in range(n):
        f, g = random_slot(rng), random_slot(rng)
        t = rng.uniform(-6, 6, 50)
        fails += not np.allclose((f * g)(t), f(t) * g(t), atol=1e-12, rtol=1e-12)
        fails += not (f * g).conj().allclose(f.conj() * g.conj())
    results.append(("pointwise_product", n, fails))

    comm = assoc = inv = grade = regroup = eta = 0
    seqs = default_seqs()
    for _ in range(n):
        a, b, c = (random_tensor(rng, seqs) for _ in range(3))
        comm += not mul(a, b).allclose(mul(b, a))
        assoc += not mul(mul(a, b), c).allclose(mul(a, mul(b, c)))
        inv += not (adjoint(mul(a, b)).allclose(mul(adjoint(a), adjoint(b)))
                    and adjoint(adjoint(a)).allclose(a))
        ha = random_homogeneous(rng, seqs[0])
        hb = random_homogeneous(rng, seqs[0])
        want = ha.terms[0].tail[0][1] + hb.terms[0].tail[0][1]
        grade += not all(t.tail.power_of(seqs[0]) == want for t in mul(ha, hb).terms)
        regroup += not regroup_check(a, b, int(rng.integers(1, 6)))
        x, y = random_support(rng), random_support(rng)
        s = dict(x)
        for k, v in y.items():
            s[k] = s.get(k, 0.0) + v
        eta += not eta_act(x, eta_act(y, ha)).allclose(eta_act(s, ha))
    results += [("commutativity", n, comm), ("associativity", n, assoc), ("involution", n, inv),
                ("grading", n, grade), ("regrouping", n, regroup), ("eta_additivity", n, eta)]
    _write(out, "algebra.csv", _csv(["check", "trials", "failures", "pass"],
                                    [(name, t, f, int(f == 0)) for name, t, f in results]))
    return 0 if all(f == 0 for _, _, f in results) else 1


def run_bochner(cfg: RunConfig, out: Path) -> int:
    s = ProductState(cfg.measure)
    rng = np.random.default_rng(cfg.seed)
    points = cfg.points or [tuple(np.round(rng.normal(size=int(rng.integers(1, 9))), 4)) for _ in range(10)]
    rows = pipeline.mc_verify(s, points, cfg.samples, cfg.seed)
    _write(out, "bochner.csv", _csv(
        ["point", "closed_re", "closed_im", "mc_re", "mc_im", "radius", "pass"],
        [(" ".join(repr(v) for v in r.point), r.closed.real, r.closed.imag, r.estimate.real,
          r.estimate.imag, r.radius, int(r.passed)) for r in rows]))
    gram_pts = [rng.normal(size=int(rng.integers(1, 9))) for _ in range(20)]
    eig = chars.psd_check(s, gram_pts)
    ctr = chars.psd_check(chars.cosine_non_state, chars.NON_STATE_POINTS)
    _write(out, "psd.csv", _csv(["function", "points", "min_eigenvalue", "expected", "pass"],
                                [("product_state", 20, eig, "psd", int(eig >= -1e-8)),
                                 ("cosine_non_state", 2, ctr, "indefinite", int(ctr < -1e-3))]))
    ok = all(r.passed for r in rows) and eig >= -1e-8 and ctr < -1e-3
    return 0 if ok else 1


def run_excess(cfg: RunConfig, out: Path) -> int:
    f = _sequence(cfg)
    mu = cfg.measure
    omega = reps.VecElem.omega(mu)
    rows = []
    ok = True
    prev_k = -1.0
    for k in range(1, cfg.k_max + 1):
        b = reps.F_elem(k, 1, f, omega, omega, cfg.depth)
        rows.append(("F", k, 1, "inf", b.value.real, b.lower, b.upper, int(b.determined)))
        Ns = sorted({k, 2 * k, 4 * k, cfg.depth} - {0})
        vals = reps.F_partials(k, 1, f, omega, omega, Ns)
        prev_n = 2.0
        for N, v in zip(Ns, vals):
            rows.append(("F_partial", k, 1, N, v.real, v.real, v.real, 1))
            ok &= v.real <= prev_n + 1e-12 and -1e-12 <= v.real <= 1 + 1e-12
            prev_n = v.real
        ok &= b.value.real >= prev_k - b.radius - 1e-12
        prev_k = b.value.real
    for ell in (1, 2, 3):
        p = reps.P_elem(f, omega, omega, cfg.depth, ell, cfg.depth)
        rows.append(("P", cfg.depth, ell, "inf", p.value.real, p.lower, p.upper, int(p.determined)))
        qv = reps.excess_elem(f, mu, depth=cfg.depth, ell=ell)
        rows.append(("Q_product", cfg.depth, ell, "inf", qv.value.real, qv.lower, qv.upper, int(qv.determined)))
        ch = Character(_point(cfg, f), cfg.q, f)
        qc = reps.excess_elem(f, ch, ell=ell)
        rows.append(("Q_character", 0, ell, "inf", qc.value.real, qc.lower, qc.upper, int(qc.determined)))
    _write(out, "excess.csv", _csv(["operator", "k", "ell", "N", "value", "lower", "upper", "determined"], rows))
    return 0 if ok else 1


def run_spectrum(cfg: RunConfig, out: Path) -> int:
    f = _sequence(cfg)
    grid = chars.q_grid_characters(f, 1000)
    F = TensorElem.pure_tail(f, 1)
    p = tail_polynomial(f, [0, 1, -1])
    rows = [(c.q, chars.char_eval(c, F).real, chars.char_eval(c, p).real) for c in grid]
    _write(out, "spectrum.csv", _csv(["q", "gamma_F", "gamma_p"], rows))
    lower = max(abs(r[2]) for r in rows)
    upper = cross_norm_upper(p)
    lower_f = max(abs(r[1]) for r in rows)
    upper_f = cross_norm_upper(F)
    _write(out, "sandwich.csv", _csv(["element", "char_sup_lower", "cross_norm_upper", "pass"],
                                     [("F", lower_f, upper_f, int(lower_f <= upper_f + 1e-12)),
                                      ("F-F^2", lower, upper, int(lower <= upper + 1e-12))]))
    probes = [("plateau:0", PointSeq()), ("ramp:0.5", PointSeq((), chars.RampOffset(f, 0.5))),
              ("ramp:1.5", PointSeq((), chars.RampOffset(f, 1.5))),
              ("sampled", PointSeq((), chars.Sampled(cfg.measure, cfg.seed))),
              ("configured", _point(cfg, f))]
    nf_rows = []
    for name, pt in probes:
        v = chars.tail_product(pt, f, 1, 1, cfg.depth)
        if isinstance(v, chars.Limit):
            nf_rows.append((name, "limit", v.value, v.lower, v.upper))
        elif isinstance(v, chars.InNf):
            nf_rows.append((name, "in_nf", 0.0, 0.0, 0.0))
        else:
            nf_rows.append((name, "undetermined", v.partial, 0.0, v.partial))
    _write(out, "nf.csv", _csv(["point", "verdict", "value", "lower", "upper"], nf_rows))
    return 0 if lower <= upper + 1e-12 and lower_f <= upper_f + 1e-12 else 1


def run_decompose(cfg: RunConfig, out: Path) -> int:
    pcfg = pipeline.PipelineCfg(depth=cfg.depth, tail_N=cfg.tail_n, ks=tuple(range(2, cfg.k_max + 1)),
                                points=tuple(cfg.points) or ((0.7, -1.3),), samples=cfg.samples,
                                seed=cfg.seed, tol=cfg.tol, f=cfg.sequence())
    report = pipeline.decompose(ProductState(cfg.measure), pcfg)
    _write(out, "report.json", report.to_json())
    for name, text in report.tables().items():
        _write(out, name, text)
    _write(out, "tail.gp", report.plot_script())
    return 0 if report.passed else 1


RUNNERS = {
    "algebra-check": run_algebra_check,
    "bochner": run_bochner,
    "excess": run_excess,
    "decompose": run_decompose,
    "spectrum": run_spectrum,
}


def _positive(kind):
    def conv(raw):
        v = kind(raw)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {raw}")
        return v
    conv.__name__ = kind.__name__
    return conv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabtensor", description=__doc__)
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="INI experiment file (default: shipped gaussian.cfg)")
    p.add_argument("--seed", type=int)
    p.add_argument("--depth", type=_positive(int))
    p.add_argument("--tol", type=_positive(float))
    p.add_argument("--samples", type=_positive(int))
    p.add_argument("--out", help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config or shipped_config())
    except ConfigError as exc:
        print(f"stabtensor: config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        if args.seed < 0:
            print("stabtensor: --seed must be >= 0", file=sys.stderr)
            return 2
        cfg.seed = args.seed
    for key in ("depth", "tol", "samples", "out"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return RUNNERS[args.subcommand](cfg, Path(cfg.out))
    except (StabTensorError, ValueError) as exc:
        print(f"stabtensor: {args.subcommand}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
