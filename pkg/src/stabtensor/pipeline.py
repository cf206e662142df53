"""Decomposition of a product state into characters, verified stage by stage.

1. choose_f picks levels k_n with plateau deficit at most n^-4;
2. verify_tail checks 1 - prod_{j=k}^N int f_j d mu_j <= 1/(k-1);
3. mc_verify compares omega(x) with a fixed-seed Monte Carlo mean of
   exp(i <x, Y>), Y ~ mu;
4. a pushforward spot check averages gamma(y, 1)(A) over sampled y and
   compares with <Omega, pi(A) Omega>.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .chars import ProductState, char_eval_batch, mc_state, state_eval
from .errors import StabTensorError
from .fnalg import make_bump, modulate
from .measures import PowerBudget, sample
from .reps import expectation
from .tensor import SelectedLevels, StabSeq, TailClass, TensorElem

SCHEMA = "itp-report/1"


def mc_radius(M: int) -> float:
    return 4.0 / math.sqrt(M)


def choose_f(s: ProductState, depth: int = 64, p: float = 4.0) -> StabSeq:
    """Stabilizing sequence with plateau deficits at most n^-p; levels checked up to ``depth``."""
    f = StabSeq("auto", SelectedLevels(s.measure, PowerBudget(p)))
    f.rule.levels(depth)  # raises HeavyTailError early
    return f


@dataclass(frozen=True)
class TailRow:
    k: int
    N: int
    residual: float
    bound: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.bound + self.tolerance


def verify_tail(f: StabSeq, s: ProductState, ks: Iterable[int] = range(2, 11), N: int = 200,
                tol: float = 1e-8) -> list[TailRow]:
    """r_k = 1 - prod_{j=k}^N int f_j d mu_j against the envelope 1/(k-1)."""
    mu = s.measure
    factors = [mu[j].bump_integral(f.level(j), 1) for j in range(1, N + 1)]
    rows = []
    for k in ks:
        if k < 2:
            raise ValueError("k must be >= 2")
        prod = float(np.prod(factors[k - 1:]))
        rows.append(TailRow(k, N, 1.0 - prod, 1.0 / (k - 1), tol))
    return rows


@dataclass(frozen=True)
class MCRow:
    point: tuple
    closed: complex
    estimate: complex
    radius: float

    @property
    def passed(self) -> bool:
        return abs(self.closed - self.estimate) <= self.radius


def _point_map(x) -> dict:
    return {n: float(v) for n, v in enumerate(x, start=1) if v != 0}


def mc_verify(s: ProductState, points: Sequence[Sequence[float]], M: int = 100000, seed: int = 0,
              depth: int | None = None, samples: np.ndarray | None = None) -> list[MCRow]:
    width = max([len(p) for p in points] + [1])
    depth = max(depth or width, width)
    if samples is None:
        samples = sample(s.measure, depth, M, seed)
    rows = []
    for x in points:
        xm = _point_map(x)
        est = mc_state(samples, xm) if xm else 1.0 + 0j
        rows.append(MCRow(tuple(float(v) for v in x), state_eval(s, xm), est, mc_radius(samples.shape[0])))
    return rows


def default_probes(f: StabSeq) -> list[tuple[str, TensorElem]]:
    """Finite-window elements over f used for the pushforward spot check."""
    tail = TailClass([(f, 1)])
    return [
        ("tail", TensorElem.pure_tail(f, 1)),
        ("tail^2", TensorElem.pure_tail(f, 2)),
        ("bump1@1", TensorElem.elem(tail, {1: make_bump(1)})),
        ("wave@1,2", TensorElem.elem(tail, {1: modulate(0.5, make_bump(2)), 2: make_bump(1)})),
    ]


@dataclass(frozen=True)
class PushRow:
    name: str
    exact: complex
    exact_radius: float
    estimate: complex
    radius: float

    @property
    def passed(self) -> bool:
        return abs(self.exact - self.estimate) <= self.radius + self.exact_radius


def pushforward_check(s: ProductState, f: StabSeq, samples: np.ndarray,
                      probes: Sequence[tuple[str, TensorElem]] | None = None, depth: int = 64) -> list[PushRow]:
    """Average of gamma(y, 1)(A) over sample rows y versus <Omega, pi(A) Omega>.

    Characters are evaluated on the sampled window only; the unseen tail can
    shift the average by at most the tail budget of f, which is added to the
    allowance.
    """
    probes = probes or default_probes(f)
    N = samples.shape[1]
    bias = f.rule.budget.tail(N) if isinstance(f.rule, SelectedLevels) else 0.0
    rows = []
    for name, A in probes:
        ell_max = max(t.tail.power_of(f) or 0 for t in A.terms)
        exact = expectation(A, s.measure, depth)
        vals = char_eval_batch(samples, f, A, 1.0)
        est = complex(np.mean(vals))
        rows.append(PushRow(name, exact.value, exact.radius, est,
                            mc_radius(samples.shape[0]) + ell_max * bias))
    return rows


@dataclass
class PipelineCfg:
    depth: int = 64
    tail_N: int = 200
    ks: tuple = tuple(range(2, 11))
    points: tuple = ((0.7, -1.3),)
    samples: int = 100000
    seed: int = 0
    tol: float = 1e-8
    mc_depth: int = 32
    f: StabSeq | None = None


@dataclass
class DecompositionReport:
    state: dict
    levels: list
    tail_rows: list = field(default_factory=list)
    mc_rows: list = field(default_factory=list)
    push_rows: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    f_id: str = "auto"

    @property
    def flags(self) -> dict:
        return {
            "choose_f": "choose_f" not in self.errors,
            "tail": "tail" not in self.errors and all(r.passed for r in self.tail_rows),
            "mc": "mc" not in self.errors and all(r.passed for r in self.mc_rows),
            "pushforward": "pushforward" not in self.errors and all(r.passed for r in self.push_rows),
        }

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        def cplx(z):
            return [float(z.real), float(z.imag)]

        return {
            "schema": SCHEMA,
            "state": self.state,
            "f": {"id": self.f_id, "levels": self.levels},
            "tail": [{"k": r.k, "N": r.N, "residual": r.residual, "bound": r.bound,
                      "tolerance": r.tolerance, "pass": r.passed} for r in self.tail_rows],
            "mc": [{"point": list(r.point), "closed": cplx(r.closed), "estimate": cplx(r.estimate),
                    "radius": r.radius, "pass": r.passed} for r in self.mc_rows],
            "pushforward": [{"element": r.name, "exact": cplx(r.exact), "exact_radius": r.exact_radius,
                             "estimate": cplx(r.estimate), "radius": r.radius, "pass": r.passed}
                            for r in self.push_rows],
            "errors": dict(sorted(self.errors.items())),
            "flags": self.flags,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def tables(self) -> dict:
        """CSV text per table name."""
        out = {}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "N", "residual", "bound", "tolerance", "pass"])
        for r in self.tail_rows:
            w.writerow([r.k, r.N, repr(r.residual), repr(r.bound), repr(r.tolerance), int(r.passed)])
        out["tail.csv"] = buf.getvalue()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point", "closed_re", "closed_im", "mc_re", "mc_im", "radius", "pass"])
        for r in self.mc_rows:
            w.writerow([" ".join(repr(v) for v in r.point), repr(r.closed.real), repr(r.closed.imag),
                        repr(r.estimate.real), repr(r.estimate.imag), repr(r.radius), int(r.passed)])
        out["mc.csv"] = buf.getvalue()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["element", "exact_re", "exact_im", "exact_radius", "mc_re", "mc_im", "radius", "pass"])
        for r in self.push_rows:
            w.writerow([r.name, repr(r.exact.real), repr(r.exact.imag), repr(r.exact_radius),
                        repr(r.estimate.real), repr(r.estimate.imag), repr(r.radius), int(r.passed)])
        out["pushforward.csv"] = buf.getvalue()
        return out

    def plot_script(self, table: str = "tail.csv") -> str:
        return (
            "# gnuplot script: tail residuals against the 1/(k-1) envelope\n"
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set logscale y\n"
            "set xlabel 'k'\n"
            "set ylabel 'residual'\n"
            f"plot '{table}' using 1:3 with linespoints title 'r_k', \\\n"
            f"     '{table}' using 1:4 with lines title '1/(k-1)'\n"
        )


def decompose(s: ProductState, cfg: PipelineCfg | None = None) -> DecompositionReport:
    """Run every stage; failures are recorded in the report instead of raised."""
    cfg = cfg or PipelineCfg()
    report = DecompositionReport(state=s.measure.to_json(), levels=[])
    try:
        f = cfg.f or choose_f(s, cfg.depth)
        report.f_id = f.id
        report.levels = f.rule.levels(cfg.depth)
    except StabTensorError as exc:
        report.errors["choose_f"] = str(exc)
        return report
    try:
        report.tail_rows = verify_tail(f, s, cfg.ks, cfg.tail_N, cfg.tol)
    except StabTensorError as exc:
        report.errors["tail"] = str(exc)
    width = max([len(p) for p in cfg.points] + [cfg.mc_depth, 1])
    samples = sample(s.measure, width, cfg.samples, cfg.seed)
    try:
        report.mc_rows = mc_verify(s, cfg.points, cfg.samples, cfg.seed, samples=samples)
    except StabTensorError as exc:
        report.errors["mc"] = str(exc)
    try:
        report.push_rows = pushforward_check(s, f, samples, depth=cfg.depth)
    except StabTensorError as exc:
        report.errors["pushforward"] = str(exc)
    return report


__all__ = [
    "choose_f", "verify_tail", "TailRow", "mc_verify", "MCRow", "pushforward_check", "PushRow",
    "default_probes", "PipelineCfg", "DecompositionReport", "decompose", "mc_radius", "SCHEMA",
]
