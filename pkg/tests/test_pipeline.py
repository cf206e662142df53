import json
import math

import numpy as np
import pytest
from scipy import special

from stabtensor import pipeline
from stabtensor.chars import ProductState
from stabtensor.measures import Gaussian, PowerBudget, ProductMeasure, Uniform
from stabtensor.tensor import constant_seq

GAUSS = ProductState(ProductMeasure.iid(Gaussian(1.0)))


def test_choose_f_deficits():
    f = pipeline.choose_f(GAUSS, 64)
    levels = f.rule.levels(64)
    deficits = [special.erfc(k / math.sqrt(2)) for k in levels]
    budget = PowerBudget(4.0)
    assert all(d <= budget(n) for n, d in enumerate(deficits, start=1))
    assert np.all(np.cumsum(deficits) <= np.cumsum([budget(n) for n in range(1, 65)]))


def test_verify_tail_bound():
    f = pipeline.choose_f(GAUSS, 200)
    rows = pipeline.verify_tail(f, GAUSS, range(2, 11), 200)
    assert all(r.passed and r.residual <= 1 / (r.k - 1) for r in rows)
    with pytest.raises(ValueError):
        pipeline.verify_tail(f, GAUSS, [1])


def test_verify_tail_constant_level_fails():
    rows = pipeline.verify_tail(constant_seq(1), GAUSS, [2, 5], 200)
    assert all(r.residual == pytest.approx(1.0, abs=1e-6) for r in rows)
    assert rows[0].passed and not rows[1].passed


def test_mc_verify():
    rows = pipeline.mc_verify(GAUSS, [(0.7, -1.3), (0.0,), (0.2, 0.0, 1.1)], 20000, seed=3)
    assert rows[1].estimate == 1 and rows[1].closed == 1
    assert all(r.passed for r in rows)
    assert rows[0].closed == pytest.approx(math.exp(-(0.49 + 1.69) / 2))


def test_pushforward():
    f = pipeline.choose_f(GAUSS, 64)
    from stabtensor.measures import sample
    ys = sample(GAUSS.measure, 32, 20000, 0)
    assert all(r.passed for r in pipeline.pushforward_check(GAUSS, f, ys))


def test_decompose_report():
    cfg = pipeline.PipelineCfg(samples=5000, tail_N=100)
    rep = pipeline.decompose(GAUSS, cfg)
    data = json.loads(rep.to_json())
    assert data["schema"] == pipeline.SCHEMA and data["pass"]
    assert set(data["flags"]) == {"choose_f", "tail", "mc", "pushforward"}
    assert set(rep.tables()) == {"tail.csv", "mc.csv", "pushforward.csv"}
    assert "plot" in rep.plot_script()


def test_decompose_uniform_and_failures():
    rep = pipeline.decompose(ProductState(ProductMeasure.iid(Uniform(-1, 1))),
                             pipeline.PipelineCfg(samples=2000, tail_N=50))
    assert rep.passed and rep.levels[:3] == [1, 1, 1]
    bad = pipeline.decompose(GAUSS, pipeline.PipelineCfg(samples=2000, f=constant_seq(1)))
    assert not bad.passed and not bad.flags["tail"]
