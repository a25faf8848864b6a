"""Command-line experiment runner.

Usage::

    evohom run counterexample --preset count_ai --grid 512 --n 64
    evohom run heat_sweep --kappa two_phase_1_2 --ladder 4..64
    evohom run certify --law law.json --c 1 --d 1
    evohom run --config experiment.yaml

Each run writes ``result.json`` and ``tables/*.csv`` to ``--out``. Exit code
0 on success, 2 if a mathematical hypothesis is violated (the violated
condition is printed), 1 on any other error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from functools import reduce

import numpy as np

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, from_mapping, load_config
from .errors import HypothesisViolation

TABLE_DIGITS = 6


# -- output helpers ------------------------------------------------------------

def _num(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def dumps(obj, indent=0):
    """JSON text with every float printed to 17 significant digits."""
    pad, inner = " " * indent, " " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {dumps(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps([float(obj.real), float(obj.imag)])
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{TABLE_DIGITS}g")
    return str(x)


def write_table(out, name, header, rows):
    d = os.path.join(out, "tables")
    os.makedirs(d, exist_ok=True)
    path = os.path.join(d, f"{name}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])
    return path


def write_result(out, result):
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "result.json")
    with open(path, "w") as fh:
        fh.write(dumps(result) + "\n")
    return path


# -- experiments ---------------------------------------------------------------

def _kappa(cfg):
    from .models.presets import get_kappa
    return get_kappa(cfg.kappa or "two_phase_1_2")


def _law(cfg):
    from .mlaw.io import load_law
    from .models.presets import get_preset
    if cfg.law is not None:
        return load_law(cfg.law)
    if cfg.preset is None:
        raise ConfigError("certify needs --law or --preset", "law")
    params = dict(cfg.params)
    if cfg.preset in ("positivity", "ode_two_phase", "range"):
        params.setdefault("n", cfg.n or 3)
    if cfg.preset == "ode_two_phase" and cfg.grid:
        params.setdefault("grid", cfg.grid[0])
    if cfg.preset == "range":
        params.setdefault("dim", 8)
    if cfg.preset in ("count_ai", "heat1d"):
        raise ConfigError(f"preset {cfg.preset!r} is an evolution problem, not a law", "preset")
    out = get_preset(cfg.preset, **params)
    return out[0] if isinstance(out, tuple) else out


def run_certify(cfg):
    from .mlaw.positivity import certify, sample_positivity
    law = _law(cfg)
    cert = certify(law, c=cfg.c, d=cfg.d)
    num = int(cfg.params.get("num_samples", 10_000))
    sample = sample_positivity(law, cert, num_samples=num, rng_seed=cfg.rng_seed)
    rows = list(cert.as_dict().items())
    write_table(cfg.output, "certificate", ["quantity", "value"], rows)
    return {"experiment": "certify", "certificate": cert.as_dict(),
            "sampling": {"ok": sample.ok, "min_value": sample.min_value,
                         "num_samples": sample.num_samples}}


def _gcd(xs):
    return reduce(math.gcd, xs)


def run_homogenize_ode(cfg):
    from .homog import coarse_probes, harmonic_mean, homogenize_ode
    from .models.presets import preset_ode_two_phase
    kappa = _kappa(cfg)
    ladder = cfg.ladder or [4, 8, 16, 32]
    grid = cfg.grid[0] if cfg.grid else 64
    pieces = int(cfg.params.get("probe_pieces", _gcd(ladder + [grid])))
    laws = [preset_ode_two_phase(n, grid, kappa) for n in ladder]
    mu = homogenize_ode(laws, probe=coarse_probes(grid, pieces), probe_tol=cfg.probe_tol,
                        ns=ladder, order=int(cfg.params.get("order", 2)))
    mu0 = np.diag(mu.coeffs[0]).real
    hm = float(np.real(harmonic_mean(kappa)))
    rows = [(r["n"], r["probe_residual"]) for r in mu.meta["history"]]
    write_table(cfg.output, "convergence", ["n", "probe_residual"], rows)
    return {"experiment": "homogenize_ode", "kappa": cfg.kappa or "two_phase_1_2",
            "ladder": ladder, "grid": grid, "probe_pieces": pieces,
            "mu0_diagonal": mu0, "harmonic_mean": hm,
            "max_error": float(np.max(np.abs(mu0 - hm))),
            "limit": mu.meta.get("limit", {})}


def _heat_system(cfg, default_grid):
    from .homog import heat_limit_system
    kappa = _kappa(cfg)
    ladder = cfg.ladder or [4, 8, 16, 32, 64]
    grid = cfg.grid[0] if cfg.grid else default_grid
    hls = heat_limit_system(kappa, grid, ladder, int(cfg.params.get("num_probes", 8)),
                            fast=bool(cfg.params.get("fast", False)), probe_tol=cfg.probe_tol)
    return kappa, ladder, grid, hls


def _heat_summary(cfg, ladder, grid, hls):
    return {"kappa": cfg.kappa or "two_phase_1_2", "ladder": ladder, "grid": grid,
            "kappa_eff": hls.kappa_eff, "harmonic_mean": hls.harmonic_mean,
            "kappa_eff_error": abs(hls.kappa_eff - hls.harmonic_mean),
            "kappa_eff_ladder": hls.kappa_eff_ladder, "correction_norms": hls.correction_norms,
            "observed_rate": hls.observed_rate, "limit": hls.limit_status}


def run_homogenize_pde(cfg):
    _, ladder, grid, hls = _heat_system(cfg, 1024)
    write_table(cfg.output, "limit_system", ["n", "kappa_eff", "correction_norm"], hls.table())
    out = {"experiment": "homogenize_pde"}
    out.update(_heat_summary(cfg, ladder, grid, hls))
    lb = hls.limit_blocks
    out["limit_blocks"] = {"b11_mean": float(np.trace(lb["b11"]) / hls.num_probes),
                           "b12_norm": float(np.linalg.norm(lb["b12"])),
                           "b21_norm": float(np.linalg.norm(lb["b21"])), "b22": lb["b22"]}
    return out


def run_heat_sweep(cfg):
    from .evolve import fine_scale_sweep, heat_forcing, homogenized_solve, temperature_error
    kappa, ladder, grid, hls = _heat_system(cfg, 1024)
    t1 = float(cfg.params.get("t1", 12.0))
    num = int(cfg.params.get("num_samples", 301))
    nu = cfg.nu if cfg.nu is not None else 1.0
    t, f = heat_forcing(grid, 0.0, t1, num)
    reps = fine_scale_sweep(kappa, ladder, grid, f, 0.0, t1, nu)
    ref = homogenized_solve(hls.kappa_eff, grid, f, 0.0, t1, nu)
    errs = [temperature_error(r, ref, grid - 1) for r in reps]
    rows = [(n, k, c, e) for (n, k, c), e in zip(hls.table(), errs)]
    write_table(cfg.output, "heat_sweep", ["n", "kappa_eff", "correction_norm",
                                           "temperature_error"], rows)
    out = {"experiment": "heat_sweep"}
    out.update(_heat_summary(cfg, ladder, grid, hls))
    out.update({"nu": nu, "temperature_errors": errs,
                "monotone": bool(np.all(np.diff(errs) < 0))})
    return out


def run_counterexample(cfg):
    preset = cfg.preset or "count_ai"
    if preset == "count_ai":
        return _count(cfg)
    if preset == "positivity":
        return _positivity(cfg)
    if preset == "range":
        return _range(cfg)
    raise ConfigError(f"no counterexample for preset {preset!r}", "preset")


def _count(cfg):
    from .homog import check_g_convergence, coarse_probes
    from .models.presets import (COUNT_FIELD, count_effective_coefficient,
                                 count_steady_response)
    grid = cfg.grid[0] if cfg.grid else 512
    n = cfg.n or 64
    ladder = cfg.ladder or [k for k in (2 ** j for j in range(20)) if k <= n]
    if ladder[-1] != n:
        ladder = ladder + [n]
    exact = (18 + 14j) / 13
    rows = []
    for k in ladder:
        b = count_effective_coefficient(k, grid)
        rows.append((k, b.real, b.imag, abs(b - exact)))
    pieces = _gcd(ladder + [grid])
    solvers = [lambda f, k=k: count_steady_response(k, grid, f) for k in ladder]
    f = np.ones(grid)
    phi = coarse_probes(grid, pieces)
    naive = complex(np.mean(COUNT_FIELD.samples)) + 1j
    rep_naive = check_g_convergence(solvers, naive, [f], phi)
    rep_exact = check_g_convergence(solvers, exact, [f], phi)
    write_table(cfg.output, "counterexample", ["n", "re", "im", "error"], rows)
    b = count_effective_coefficient(n, grid)
    return {"experiment": "counterexample", "preset": "count_ai", "grid": grid, "n": n,
            "effective_coefficient": complex(b), "exact": exact, "error": abs(b - exact),
            "mean_inverse": complex(np.mean(count_steady_response(n, grid))),
            "naive_candidate": naive,
            "naive_residual": rep_naive.max_coefficient_residual,
            "naive_rejected": not rep_naive.passed,
            "exact_residual": rep_exact.max_coefficient_residual,
            "exact_accepted": rep_exact.passed}


def _positivity(cfg):
    from .evolve import EvolutionProblem, solve, weighted_norm
    from .models.presets import preset_counterexample_positivity
    ladder = cfg.ladder or [1, 2, 4, 8, 16]
    t, f = _pulse_grid()
    nu = cfg.nu if cfg.nu is not None else 1.0
    rows = []
    for n in ladder:
        p = EvolutionProblem(np.zeros((1, 1)), preset_counterexample_positivity(n), f[:, None],
                             t[0], t[-1], nu=nu)
        rep = solve(p)
        ratio = weighted_norm(rep.u[:, 0], t, nu) / weighted_norm(f, t, nu)
        rows.append((n, ratio, abs(ratio - n) / n))
    write_table(cfg.output, "positivity", ["n", "norm_ratio", "relative_deviation"], rows)
    return {"experiment": "counterexample", "preset": "positivity", "ladder": ladder,
            "norm_ratios": [r[1] for r in rows],
            "max_relative_deviation": max(r[2] for r in rows)}


def _pulse_grid(t1=12.0, num_samples=241, center=5.0, width=0.7):
    t = np.linspace(0.0, t1, num_samples)
    return t, np.exp(-((t - center) / width) ** 2)


def _range(cfg):
    from .evolve import EvolutionProblem, solve
    from .models.presets import preset_counterexample_range
    dim = int(cfg.params.get("dim", 8))
    n = cfg.n or 3
    rng = np.random.default_rng(cfg.rng_seed)
    t, pulse = _pulse_grid()
    f = np.outer(pulse, rng.standard_normal(dim))
    p = EvolutionProblem(np.zeros((dim, dim)), preset_counterexample_range(dim, n), f, t[0], t[-1],
                         nu=cfg.nu if cfg.nu is not None else 1.0)
    rep = solve(p)
    rows = [(m, float(np.max(np.abs(rep.u[:, m - 1] - f[:, m - 1])))) for m in range(1, n)]
    write_table(cfg.output, "range", ["m", "max_abs_difference"], rows)
    return {"experiment": "counterexample", "preset": "range", "dim": dim, "n": n,
            "probe_identity_residual": max((r[1] for r in rows), default=0.0),
            "note": "finite-dimensional illustration"}


def run_causality(cfg):
    from .evolve import check_causality, solve
    from .models.presets import random_certified_problem
    rng = np.random.default_rng(cfg.rng_seed)
    sizes = tuple(cfg.params.get("sizes", (1, 1, 1, 1)))
    p, cert = random_certified_problem(rng, sizes, nu=cfg.nu)
    rep = solve(p, check_grid=False)
    r_causal = check_causality(p, p.meta["a"])
    r_anti = check_causality(p, p.meta["a"], symbol="anticausal")
    rows = [("causal", r_causal), ("anticausal", r_anti)]
    write_table(cfg.output, "causality", ["symbol", "residual"], rows)
    return {"experiment": "causality", "dim": p.dim, "nu": p.nu, "certificate": cert.as_dict(),
            "op_norm_est": rep.op_norm_est, "op_norm_bound": 1.0 / cert.c_out,
            "causal_residual": r_causal, "anticausal_residual": r_anti}


RUNNERS = {
    "certify": run_certify,
    "homogenize_ode": run_homogenize_ode,
    "homogenize_pde": run_homogenize_pde,
    "heat_sweep": run_heat_sweep,
    "counterexample": run_counterexample,
    "causality": run_causality,
}


def run(cfg):
    """Execute one experiment; returns the result mapping and writes artifacts."""
    result = RUNNERS[cfg.experiment](cfg)
    write_result(cfg.output, result)
    return result


# -- argument parsing ------------------------------------------------------------

def _param(s):
    if "=" not in s:
        raise argparse.ArgumentTypeError("expected key=value")
    k, v = s.split("=", 1)
    import yaml
    return k, yaml.safe_load(v)


def build_parser():
    p = argparse.ArgumentParser(prog="evohom", description=__doc__.split("\n")[0])
    p.add_argument("--config", help="YAML experiment file")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    r.add_argument("--config", dest="run_config", help="YAML experiment file")
    r.add_argument("--preset")
    r.add_argument("--law", help="material law JSON file")
    r.add_argument("--kappa", help="conductivity id, e.g. two_phase_1_2")
    r.add_argument("--ladder", help="4..64 or 4,8,16")
    r.add_argument("--grid", help="grid size (or list)")
    r.add_argument("--n", type=int)
    r.add_argument("--nu", type=float)
    r.add_argument("--c", type=float)
    r.add_argument("--d", type=float)
    r.add_argument("--probe-tol", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--param", action="append", type=_param, default=[],
                   help="preset parameter key=value (repeatable)")
    return p


def config_from_args(args):
    """Config from a file and/or flags; flags given explicitly win."""
    data = {}
    if args.command == "run":
        data = {"experiment": args.experiment, "preset": args.preset, "law": args.law,
                "kappa": args.kappa, "ladder": args.ladder, "grid": args.grid, "n": args.n,
                "nu": args.nu, "c": args.c, "d": args.d, "output": args.out,
                "rng_seed": args.seed, "params": dict(args.param) or None}
        if args.probe_tol is not None:
            data["tolerances"] = {"probe_tol": args.probe_tol}
    data = {k: v for k, v in data.items() if v is not None}
    path = args.config or getattr(args, "run_config", None)
    if path:
        return load_config(path, data)
    if "experiment" not in data:
        raise ConfigError("give an experiment or --config")
    return from_mapping(data)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are configuration errors, not hypothesis violations
        return 0 if exc.code in (0, None) else 1
    try:
        cfg = config_from_args(args)
        result = run(cfg)
    except HypothesisViolation as exc:
        print(f"hypothesis violated [{exc.condition}]: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the exit-code contract covers every error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(_summary(cfg, result))
    return 0


def _summary(cfg, result):
    keys = ("effective_coefficient", "kappa_eff", "max_error", "causal_residual",
            "anticausal_residual", "max_relative_deviation", "probe_identity_residual")
    parts = [f"{cfg.experiment}:"]
    for k in keys:
        if k in result:
            v = result[k]
            if isinstance(v, complex):
                v = f"{v.real:.6g}{v.imag:+.6g}i"
            elif isinstance(v, float):
                v = f"{v:.6g}"
            parts.append(f"{k}={v}")
    if "certificate" in result:
        c = result["certificate"]
        parts.append(f"nu1={c['nu1']:.6g} delta_hat={c['delta_hat']:.6g} r={c['r']:.6g}")
    parts.append(f"-> {os.path.join(cfg.output, 'result.json')}")
    return " ".join(parts)


if __name__ == "__main__":
    sys.exit(main())
