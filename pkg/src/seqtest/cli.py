"""Command-line entry point.

Subcommands: solve, boundaries, verify, simulate, oracle, probe, plot-data.
Exit codes: 0 success, 1 an asserted check failed, 2 usage/config error.
All randomness flows from --seed; every numeric output round-trips
losslessly through the matching importer.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import checks as checks_mod
from .families import family_for_prior, family_from_scheme_csv
from .priors import load_prior_csv
from .simulate import FixedSampleRule, ThresholdRule, brute_force_value, simulate_alternative, simulate_policy
from .solver import (
    choose_horizon,
    read_surface_json,
    solve,
    value_at,
    write_boundaries_csv,
    write_surface_json,
    write_value_layers_csv,
)


def _load_model(args, prior):
    if getattr(args, "scheme", None):
        return family_from_scheme_csv(args.scheme)
    if not getattr(args, "model", None):
        raise ValueError("a --model name (or --scheme file) is required")
    params = {}
    if getattr(args, "nodes", None):
        params["nodes"] = int(args.nodes)
    return family_for_prior(args.model, prior, params or None)


def _require_file(path, what):
    if not path:
        raise ValueError(f"{what} is required")
    if not os.path.exists(path):
        raise ValueError(f"{what} not found: {path}")
    return path


def _resolve_horizon(args):
    if args.horizon == "auto":
        return choose_horizon(float(args.cost), float(args.slack))
    return int(args.horizon)


def _cmd_solve(args):
    cfg = {}
    if args.config:
        with open(_require_file(args.config, "config file"), encoding="utf-8") as fh:
            cfg = json.load(fh)
    merged = {
        "model": args.model or cfg.get("model"),
        "scheme": args.scheme or cfg.get("scheme"),
        "prior": args.prior or cfg.get("prior"),
        "cost": args.cost if args.cost is not None else cfg.get("cost"),
        "horizon": args.horizon or cfg.get("horizon", "auto"),
        "slack": args.slack if args.slack is not None else cfg.get("slack", 0.1),
        "grid_size": args.grid_size or cfg.get("grid_size", 2001),
        "grid_kind": args.grid_kind or cfg.get("grid_kind", "uniform"),
        "nodes": args.nodes or cfg.get("nodes"),
        "seed": args.seed if args.seed is not None else cfg.get("seed", 0),
        "out": args.out or cfg.get("out"),
    }
    if merged["cost"] is None:
        raise ValueError("cost is required")
    if float(merged["cost"]) <= 0:
        raise ValueError("cost must be positive")
    if not merged["out"]:
        raise ValueError("an --out directory is required")

    ns = argparse.Namespace(**merged)
    prior = load_prior_csv(_require_file(merged["prior"], "prior file"))
    family = _load_model(ns, prior)
    horizon = _resolve_horizon(ns)
    surface = solve(
        prior,
        family,
        float(merged["cost"]),
        horizon,
        grid_size=int(merged["grid_size"]),
        grid_kind=merged["grid_kind"],
    )
    out = merged["out"]
    os.makedirs(out, exist_ok=True)
    write_surface_json(surface, os.path.join(out, "surface.json"))
    write_boundaries_csv(surface, os.path.join(out, "boundaries.csv"))
    with open(os.path.join(out, "run_config.json"), "w", encoding="utf-8") as fh:
        json.dump({**merged, "resolved_horizon": horizon, "subcommand": "solve"}, fh, indent=2)
        fh.write("\n")
    print(f"solved: horizon={horizon} grid={surface.pi_grid.size} -> {out}")
    return 0


def _cmd_boundaries(args):
    surface = read_surface_json(_require_file(args.surface, "surface file"))
    if args.out:
        write_boundaries_csv(surface, args.out)
    else:
        sys.stdout.write("n,b1,b2\n")
        for n in range(surface.horizon + 1):
            sys.stdout.write(f"{n},{float(surface.b1[n])!r},{float(surface.b2[n])!r}\n")
    return 0


def _cmd_plot_data(args):
    surface = read_surface_json(_require_file(args.surface, "surface file"))
    os.makedirs(args.out, exist_ok=True)
    write_value_layers_csv(surface, os.path.join(args.out, "value_layers.csv"))
    write_boundaries_csv(surface, os.path.join(args.out, "boundaries.csv"))
    return 0


_MEASURE_CHECKS = ("concentration", "level-spread", "convex-order", "binomial-reduction")


def _run_one_check(name, args):
    if name in ("concavity", "time-monotonicity"):
        surface = read_surface_json(_require_file(args.surface, "surface file"))
        if name == "concavity":
            return checks_mod.check_concavity(surface, tol=args.tol or 1e-8)
        return checks_mod.check_time_monotonicity(surface, tol=args.tol or 1e-6, burn=args.burn)
    prior = load_prior_csv(_require_file(args.prior, "prior file"))
    if name == "binomial-reduction":
        if args.N is None or args.cost is None:
            raise ValueError("binomial-reduction requires --N and --cost")
        return checks_mod.check_binomial_reduction(
            args.N, prior, float(args.cost), grid_size=args.grid_size or 2001, tol=args.tol or 1e-6
        )
    family = _load_model(args, prior)
    if name == "concentration":
        lo, hi = float(prior.atoms[0]), float(prior.atoms[-1])
        a = args.a if args.a is not None else 0.5 * (lo + prior.theta0)
        b = args.b if args.b is not None else 0.5 * (hi + prior.theta0)
        return checks_mod.check_concentration(
            prior, family, args.pi, float(a), float(b), args.n_max, tol=args.tol or 1e-8
        )
    if name == "level-spread":
        return checks_mod.check_level_spread(
            prior, family, args.pi1, args.pi2, args.n_max, tol=args.tol or 1e-8
        )
    if name == "convex-order":
        return checks_mod.check_convex_order(
            prior, family, args.pi, args.m, args.n, tol=args.tol or 1e-8
        )
    raise ValueError(f"unknown check '{name}'")


def _cmd_verify(args):
    reports = [_run_one_check(name, args) for name in args.check]
    lines = "\n".join(r.to_json() for r in reports)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(lines + "\n")
    else:
        print(lines)
    return 1 if any(r.asserted and not r.passed for r in reports) else 0


def _parse_rule(spec, default_cap):
    kind, _, rest = spec.partition(":")
    if kind == "fixed":
        return FixedSampleRule(size=int(rest))
    if kind == "threshold":
        parts = rest.split(",")
        if len(parts) == 2:
            return ThresholdRule(low=float(parts[0]), high=float(parts[1]), max_steps=default_cap)
        if len(parts) == 3:
            return ThresholdRule(low=float(parts[0]), high=float(parts[1]), max_steps=int(parts[2]))
    raise ValueError(f"malformed rule spec '{spec}'; use fixed:K or threshold:LO,HI[,CAP]")


def _cmd_simulate(args):
    surface = read_surface_json(_require_file(args.surface, "surface file"))
    prior = load_prior_csv(_require_file(args.prior, "prior file"))
    family = _load_model(args, prior)
    if args.rule:
        rule = _parse_rule(args.rule, surface.horizon)
        report = simulate_alternative(
            rule, prior, family, surface.cost, args.replicates, args.seed, trace_path=args.trace
        )
    else:
        report = simulate_policy(surface, prior, family, args.replicates, args.seed, trace_path=args.trace)
    payload = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    root_pi = prior.mass_above_threshold
    print(
        f"value at root pi={root_pi!r}: {value_at(surface, 0, root_pi)!r}",
        file=sys.stderr,
    )
    return 0


def _cmd_oracle(args):
    prior = load_prior_csv(_require_file(args.prior, "prior file"))
    family = _load_model(args, prior)
    value = brute_force_value(prior, family, float(args.cost), int(args.horizon))
    print(json.dumps({"value": value, "horizon": int(args.horizon), "cost": float(args.cost)}))
    return 0


def _cmd_probe(args):
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    reports = checks_mod.conjecture_probe(
        models,
        cost=float(args.cost),
        trials=int(args.trials),
        seed=int(args.seed),
        grid_size=int(args.grid_size),
    )
    lines = "\n".join(r.to_json() for r in reports)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(lines + "\n")
    else:
        print(lines)
    findings = [r for r in reports if not r.passed]
    print(f"probe finished: {len(reports)} trials, {len(findings)} findings", file=sys.stderr)
    return 0  # findings never affect the exit code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqtest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_opts(p):
        p.add_argument("--model", help="named model, e.g. bernoulli, binomial(3), gaussian-mean")
        p.add_argument("--scheme", help="CSV (header x,h) defining a custom finite model")
        p.add_argument("--prior", help="prior CSV: '# theta0=...' line then header u,w")
        p.add_argument("--nodes", type=int, help="quadrature node count override")

    p = sub.add_parser("solve", help="solve the value surface and boundaries")
    add_model_opts(p)
    p.add_argument("--cost", type=float)
    p.add_argument("--horizon", default=None, help="integer or 'auto'")
    p.add_argument("--slack", type=float, default=None)
    p.add_argument("--grid-size", dest="grid_size", type=int, default=None)
    p.add_argument("--grid-kind", dest="grid_kind", choices=("uniform", "cosine"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1, help="worker cap (single-process run)")
    p.add_argument("--config", help="JSON config; flags override its values")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("boundaries", help="export boundaries from a surface")
    p.add_argument("--surface", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_boundaries)

    p = sub.add_parser("verify", help="run structural checks; exit 1 on failure")
    add_model_opts(p)
    p.add_argument("--check", action="append", required=True, help="repeatable check name")
    p.add_argument("--surface")
    p.add_argument("--tol", type=float)
    p.add_argument("--burn", type=int, default=None)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=15)
    p.add_argument("--pi1", type=float, default=0.3)
    p.add_argument("--pi2", type=float, default=0.7)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--N", type=int, default=None, help="binomial batch size")
    p.add_argument("--cost", type=float, default=None)
    p.add_argument("--grid-size", dest="grid_size", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo run of the policy or a baseline rule")
    add_model_opts(p)
    p.add_argument("--surface", required=True)
    p.add_argument("--replicates", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rule", help="fixed:K or threshold:LO,HI[,CAP]; default is the solved policy")
    p.add_argument("--trace", help="optional per-replicate CSV trace")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("oracle", help="exact tree value for finite-outcome models")
    add_model_opts(p)
    p.add_argument("--cost", type=float, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("probe", help="randomized time-monotonicity probe")
    p.add_argument("--models", default=",".join(checks_mod.PROBE_WINDOWS))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--cost", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-size", dest="grid_size", type=int, default=501)
    p.add_argument("--threads", type=int, default=1, help="worker cap (single-process run)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("plot-data", help="CSV data behind value/boundary figures")
    p.add_argument("--surface", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot_data)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
