"""Experiment configuration: YAML files and command-line flags.

A config file is a YAML mapping::

    experiment: heat_sweep        # certify | homogenize_ode | homogenize_pde |
                                  # heat_sweep | counterexample | causality
    kappa: two_phase_1_2          # conductivity id
    ladder: 4..64                 # doubling range, or a list [4, 8, 16]
    grid: 1024                    # one size or a list (one per ladder entry)
    nu: 1.0                       # weight override
    tolerances: {probe_tol: 1.0e-8}
    output: results/heat          # directory for result.json and tables/
    rng_seed: 0

Other keys: ``preset``, ``law`` (path of a JSON law), ``n``, ``c``, ``d``,
``params`` (preset-specific mapping).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import yaml

EXPERIMENTS = ("certify", "homogenize_ode", "homogenize_pde", "heat_sweep", "counterexample",
               "causality")
KEYS = ("experiment", "preset", "law", "kappa", "ladder", "grid", "n", "nu", "c", "d",
        "tolerances", "output", "rng_seed", "params")
TOLERANCE_KEYS = ("probe_tol", "rank_tol", "angle_tol")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field
        self.line = line


@dataclass
class ExperimentConfig:
    experiment: str
    preset: str | None = None
    law: str | None = None
    kappa: str | None = None
    ladder: list = field(default_factory=list)
    grid: list = field(default_factory=list)
    n: int | None = None
    nu: float | None = None
    c: float | None = None
    d: float | None = None
    tolerances: dict = field(default_factory=dict)
    output: str = "."
    rng_seed: int = 0
    params: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def probe_tol(self):
        return float(self.tolerances.get("probe_tol", 1e-8))

    def grid_for(self, i):
        """Grid size paired with ladder entry ``i`` (a single grid is shared)."""
        if not self.grid:
            return None
        return self.grid[i] if len(self.grid) > 1 else self.grid[0]


def parse_ladder(x):
    """``"4..64"`` (doubling), ``"4,8,16"``, an int or a list."""
    if x is None:
        return []
    if isinstance(x, int):
        return [x]
    if isinstance(x, (list, tuple)):
        return [int(v) for v in x]
    s = str(x).strip()
    if ".." in s:
        lo, hi = (int(v) for v in s.split(".."))
        if lo < 1 or hi < lo:
            raise ValueError(f"bad ladder range {s!r}")
        out = [lo]
        while out[-1] * 2 <= hi:
            out.append(out[-1] * 2)
        return out
    return [int(v) for v in s.replace(" ", "").split(",") if v]


def _line_map(text):
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def load_config(path, overrides=None):
    """Parse and validate a YAML config file; ``overrides`` replace file values."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line=line) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    lines = _line_map(text)
    base = os.path.dirname(os.path.abspath(path))
    if isinstance(data.get("law"), str) and not os.path.isabs(data["law"]):
        data["law"] = os.path.join(base, data["law"])
    for k, v in (overrides or {}).items():
        if k == "params":
            data["params"] = {**(data.get("params") or {}), **v}
        elif k == "tolerances":
            data["tolerances"] = {**(data.get("tolerances") or {}), **v}
        else:
            data[k] = v
    return from_mapping(data, lines)


def from_mapping(data, lines=None):
    """Build and validate an :class:`ExperimentConfig` from a plain mapping."""
    lines = lines or {}
    for k in data:
        if k not in KEYS:
            raise ConfigError(f"unknown key; expected one of {list(KEYS)}", k, lines.get(k))

    def fail(key, msg):
        raise ConfigError(msg, key, lines.get(key))

    exp = data.get("experiment")
    if exp not in EXPERIMENTS:
        fail("experiment", f"must be one of {list(EXPERIMENTS)}, got {exp!r}")
    try:
        ladder = parse_ladder(data.get("ladder"))
    except (TypeError, ValueError) as exc:
        fail("ladder", str(exc))
    try:
        grid = parse_ladder(data.get("grid"))
    except (TypeError, ValueError) as exc:
        fail("grid", str(exc))
    if len(grid) > 1 and ladder and len(grid) != len(ladder):
        fail("grid", "give one grid size or one per ladder entry")
    tol = data.get("tolerances") or {}
    if not isinstance(tol, dict):
        fail("tolerances", "must be a mapping")
    for k, v in tol.items():
        if k not in TOLERANCE_KEYS:
            fail("tolerances", f"unknown tolerance {k!r}")
        try:
            tol[k] = float(v)
        except (TypeError, ValueError):
            fail("tolerances", f"{k} must be a number")
    cfg = {}
    for key, cast in (("n", int), ("nu", float), ("c", float), ("d", float), ("rng_seed", int)):
        if data.get(key) is not None:
            try:
                cfg[key] = cast(data[key])
            except (TypeError, ValueError):
                fail(key, f"must be {cast.__name__}")
    params = data.get("params") or {}
    if not isinstance(params, dict):
        fail("params", "must be a mapping")
    out = ExperimentConfig(exp, preset=data.get("preset"), law=data.get("law"),
                           kappa=data.get("kappa"), ladder=ladder, grid=grid,
                           tolerances=tol, output=str(data.get("output", ".")), params=params,
                           lines=lines, **cfg)
    validate(out)
    return out


def validate(cfg):
    lines = cfg.lines
    if cfg.law is not None and not os.path.isfile(cfg.law):
        raise ConfigError(f"file {cfg.law!r} does not exist", "law", lines.get("law"))
    if cfg.nu is not None and not cfg.nu > 0:
        raise ConfigError("must be positive", "nu", lines.get("nu"))
    if any(n < 1 for n in cfg.ladder):
        raise ConfigError("entries must be positive", "ladder", lines.get("ladder"))
    for i, n in enumerate(cfg.ladder):
        g = cfg.grid_for(i)
        if g is not None and g % n:
            raise ConfigError(f"ladder entry {n} does not divide grid size {g}", "ladder",
                              lines.get("ladder"))
    if cfg.n is not None and cfg.grid and cfg.grid[0] % cfg.n:
        raise ConfigError(f"n = {cfg.n} does not divide grid size {cfg.grid[0]}", "n",
                          lines.get("n"))
