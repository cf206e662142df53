"""Experiment configuration: INI sections with a fixed set of keys.

Example::

    [run]
    seed = 7
    depth = 64
    samples = 100000

    [measure]
    kind = gaussian
    sigma = 1.0

    [sequence]
    levels = auto

    [character]
    q = 0.5
    point = plateau:0

    [points]
    x1 = 0.7, -1.3

Every diagnostic names the offending line.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .measures import Gaussian, Measure1D, ProductMeasure, Uniform
from .tensor import PeriodicLevels, StabSeq

SECTIONS = {
    "run": {"seed", "depth", "samples", "tol", "out", "tail_n", "k_max", "trials"},
    "measure": {"kind", "sigma", "a", "b"},
    "sequence": {"levels"},
    "character": {"q", "point"},
    "points": None,  # free keys, each a comma-separated vector
}


@dataclass
class RunConfig:
    seed: int = 0
    depth: int = 64
    samples: int = 100000
    tol: float = 1e-8
    out: str = "out"
    tail_n: int = 200
    k_max: int = 10
    trials: int = 100
    measure: ProductMeasure = field(default_factory=lambda: ProductMeasure.iid(Gaussian(1.0)))
    levels: str = "auto"
    q: float = 0.5
    point: str = "plateau:0"
    points: list = field(default_factory=list)

    def sequence(self) -> StabSeq | None:
        """Configured stabilizing sequence, or None for automatic selection."""
        if self.levels == "auto":
            return None
        kind, _, arg = self.levels.partition(":")
        vals = tuple(int(v) for v in arg.split(","))
        if kind == "constant":
            return StabSeq(f"const{vals[0]}", PeriodicLevels((), vals[:1]))
        return StabSeq("periodic:" + ",".join(map(str, vals)), PeriodicLevels((), vals))


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    lines = text.splitlines()
    current = None
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section:
            m = re.match(r"^([^=:#;]+?)\s*[=:]", s)
            if m and m.group(1).strip().lower() == key:
                return i
    return None


def _num(text, section, key, raw, kind, positive=True):
    try:
        v = kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected {kind.__name__}, got {raw!r}",
                          _line_of(text, section, key)) from None
    if positive and not v > 0:
        raise ConfigError(f"[{section}] {key} must be positive", _line_of(text, section, key))
    return v


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    cfg = RunConfig()
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, section))
        allowed = SECTIONS[section]
        for key in parser[section]:
            if allowed is not None and key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]", _line_of(text, section, key))
    if parser.has_section("run"):
        r = parser["run"]
        for key, kind in (("seed", int), ("depth", int), ("samples", int), ("tail_n", int),
                          ("k_max", int), ("trials", int), ("tol", float)):
            if key in r:
                setattr(cfg, key, _num(text, "run", key, r[key], kind, positive=(key != "seed")))
        if cfg.seed < 0:
            raise ConfigError("[run] seed must be >= 0", _line_of(text, "run", "seed"))
        if "out" in r:
            cfg.out = r["out"]
    if parser.has_section("measure"):
        cfg.measure = ProductMeasure.iid(_measure(text, parser["measure"]))
    if parser.has_section("sequence") and "levels" in parser["sequence"]:
        cfg.levels = parser["sequence"]["levels"].strip()
        _check_levels(text, cfg.levels)
    if parser.has_section("character"):
        c = parser["character"]
        if "q" in c:
            q = _num(text, "character", "q", c["q"], float, positive=False)
            if not 0 < q <= 1:
                raise ConfigError("q must lie in (0,1]", _line_of(text, "character", "q"))
            cfg.q = q
        if "point" in c:
            cfg.point = c["point"].strip()
            kind = cfg.point.partition(":")[0]
            if kind not in ("plateau", "ramp", "constant", "sampled"):
                raise ConfigError(f"unknown point rule {kind!r}", _line_of(text, "character", "point"))
    if parser.has_section("points"):
        for key in parser["points"]:
            raw = parser["points"][key]
            try:
                cfg.points.append(tuple(float(v) for v in raw.split(",") if v.strip()))
            except ValueError:
                raise ConfigError(f"[points] {key}: expected comma-separated numbers",
                                  _line_of(text, "points", key)) from None
    return cfg


def _measure(text: str, sec) -> Measure1D:
    kind = sec.get("kind", "gaussian").strip()
    if kind == "gaussian":
        return Gaussian(_num(text, "measure", "sigma", sec.get("sigma", "1.0"), float))
    if kind == "uniform":
        a = _num(text, "measure", "a", sec.get("a", "-1.0"), float, positive=False)
        b = _num(text, "measure", "b", sec.get("b", "1.0"), float, positive=False)
        if not a < b:
            raise ConfigError("uniform measure needs a < b", _line_of(text, "measure", "b"))
        return Uniform(a, b)
    raise ConfigError(f"unknown measure kind {kind!r}", _line_of(text, "measure", "kind"))


def _check_levels(text: str, levels: str) -> None:
    if levels == "auto":
        return
    kind, _, arg = levels.partition(":")
    line = _line_of(text, "sequence", "levels")
    if kind not in ("constant", "periodic"):
        raise ConfigError(f"levels must be auto, constant:K or periodic:K1,K2,...; got {levels!r}", line)
    try:
        vals = [int(v) for v in arg.split(",")]
    except ValueError:
        raise ConfigError(f"levels must be integers, got {arg!r}", line) from None
    if not vals or any(v < 1 for v in vals):
        raise ConfigError("levels must be integers >= 1", line)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def shipped_config(name: str = "gaussian.cfg") -> Path:
    return Path(__file__).with_name("configs") / name
