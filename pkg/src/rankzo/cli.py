"""Command-line entry point: optimize / verify / bench / ablate / predict.

Configuration is a flat structured-text file, one ``dotted.key = value``
per line, ``#`` comments allowed.  The full schema is documented in the
README; the important keys are::

    objective.kind = quadratic | rosenbrock
    objective.d, objective.mu, objective.L, objective.seed
    optimizer.N, optimizer.T, optimizer.scheme
    optimizer.step = instrumented | fixed | backtracking
    optimizer.alpha = instrumented | fixed | geometric
    optimizer.eta0, optimizer.shrink, optimizer.max_tries
    optimizer.alpha0, optimizer.gamma, optimizer.alpha_c
    optimizer.seed, optimizer.delta, optimizer.eps
    verify.events, verify.trials, verify.trials_appendix,
    verify.n, verify.d, verify.delta, verify.alpha_scale, verify.seed
    bench.dims, bench.kappas, bench.ns, bench.schemes, bench.seeds,
    bench.eps_rel, bench.mu, bench.objective_seed

Exit codes: 0 success, 1 verification failure, 2 config error,
3 runtime error.  All CSV output uses '.' decimals, '\\n' line endings
and a header row; reruns with the same config and seed are byte
identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import Dict, List, Optional

import numpy as np

from .bench import (ExperimentGrid, GridCell, build_objective,
                    queries_to_target, run_grid)
from .optimizer import AlphaPolicy, RunConfig, StepPolicy, run
from .sampling import new_generator
from .theory import (APPENDIX_IDS, EVENT_IDS, EventCheckReport, EventSetup,
                     c_d_delta, check_appendix_bounds, check_event, floors,
                     predict_complexity)

__all__ = ["main", "parse_config", "ConfigError"]

ALL_CHECKS = EVENT_IDS + APPENDIX_IDS


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------

def parse_config(path: str) -> Dict[str, str]:
    """Read a flat ``key = value`` file into a dict of strings."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    out: Dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            out[key] = value
    return out


def _get(cfg: Dict[str, str], key: str, cast, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    try:
        return cast(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {cfg[key]!r} ({exc})") from None


def _int_list(text: str) -> List[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> List[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _str_list(text: str) -> List[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def build_objective_from_config(cfg: Dict[str, str]):
    kind = _get(cfg, "objective.kind", str, "quadratic")
    d = _get(cfg, "objective.d", int)
    mu = _get(cfg, "objective.mu", float, 1.0)
    l_const = _get(cfg, "objective.L", float, 10.0)
    seed = _get(cfg, "objective.seed", int, 7)
    curvature = _get(cfg, "objective.curvature", float, 0.5)
    try:
        return build_objective(kind, d, mu, l_const, seed, curvature)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_run_config(cfg: Dict[str, str], seed_override: Optional[int]) -> RunConfig:
    step_kind = _get(cfg, "optimizer.step", str, "instrumented")
    alpha_kind = _get(cfg, "optimizer.alpha", str, "instrumented")
    try:
        step = StepPolicy(kind=step_kind,
                          eta0=_get(cfg, "optimizer.eta0", float, 1.0),
                          shrink=_get(cfg, "optimizer.shrink", float, 0.5),
                          max_tries=_get(cfg, "optimizer.max_tries", int, 40))
        alpha = AlphaPolicy(kind=alpha_kind,
                            alpha0=_get(cfg, "optimizer.alpha0", float, 1e-3),
                            gamma=_get(cfg, "optimizer.gamma", float, 0.99),
                            c=_get(cfg, "optimizer.alpha_c", float, 1.0))
        seed = seed_override if seed_override is not None \
            else _get(cfg, "optimizer.seed", int, 0)
        return RunConfig(
            n=_get(cfg, "optimizer.N", int),
            iterations=_get(cfg, "optimizer.T", int),
            scheme=_get(cfg, "optimizer.scheme", str, "uniform"),
            step=step, alpha=alpha, seed=seed,
            delta=_get(cfg, "optimizer.delta", float, 0.1),
            eps_target=_get(cfg, "optimizer.eps", float, float("nan")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_optimize(args) -> int:
    cfg = parse_config(args.config)
    obj = build_objective_from_config(cfg)
    run_cfg = build_run_config(cfg, args.seed)
    os.makedirs(args.out, exist_ok=True)
    trace = run(obj, run_cfg)
    trace.to_csv(os.path.join(args.out, "trace.csv"))
    with open(os.path.join(args.out, "summary.json"), "w", newline="\n") as fh:
        json.dump(trace.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.verbose:
        print(f"final_gap={trace.final_gap!r} total_queries={trace.total_queries}")
    return 0


def _verify_reports(cfg: Dict[str, str], args) -> List[EventCheckReport]:
    events_text = _get(cfg, "verify.events", str, "all")
    names = list(ALL_CHECKS) if events_text == "all" else _str_list(events_text)
    if not names:
        raise ConfigError("verify.events is empty")
    unknown = [e for e in names if e not in ALL_CHECKS]
    if unknown:
        raise ConfigError(f"unknown verification events: {unknown}")

    trials = args.trials if args.trials is not None \
        else _get(cfg, "verify.trials", int, 10_000)
    trials_appendix = _get(cfg, "verify.trials_appendix", int, 100_000)
    n = _get(cfg, "verify.n", int, 32)
    d = _get(cfg, "verify.d", int, 100)
    delta = _get(cfg, "verify.delta", float, 0.1)
    alpha_scale = _get(cfg, "verify.alpha_scale", float, 1.0)
    seed = args.seed if args.seed is not None else _get(cfg, "verify.seed", int, 7)

    obj = build_objective(
        "quadratic", d,
        _get(cfg, "verify.mu", float, 1.0),
        _get(cfg, "verify.L", float, 10.0),
        _get(cfg, "verify.objective_seed", int, 3))
    state_rng = new_generator(seed + 909)
    x = obj.x_star + state_rng.standard_normal(d)
    gnorm = float(np.linalg.norm(obj.grad(x)))
    alpha = alpha_scale * gnorm / (4.0 * obj.L * c_d_delta(d, delta))
    setup = EventSetup(obj=obj, x=x, alpha=alpha, n=n, delta=delta)

    reports: List[EventCheckReport] = []
    for name in names:
        rng = new_generator(seed + 101 * (ALL_CHECKS.index(name) + 1))
        try:
            if name in EVENT_IDS:
                reports.append(check_event(name, setup, trials, rng))
            else:
                reports.append(check_appendix_bounds(name, None, trials_appendix, rng))
        except ValueError as exc:
            # a violated checker precondition (e.g. alpha outside the
            # regime bound) is reported as a failure, not a crash
            reports.append(EventCheckReport(
                event_id=name, trials=0, empirical_failure_rate=float("nan"),
                theoretical_bound=float("nan"), passed=False,
                params={"precondition_error": 1.0}))
            if args.verbose:
                print(f"{name}: precondition violated: {exc}", file=sys.stderr)
    return reports


def cmd_verify(args) -> int:
    cfg = parse_config(args.config) if args.config else {}
    reports = _verify_reports(cfg, args)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "reports.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("event_id,params,trials,empirical,bound,pass\n")
        for r in reports:
            fh.write(",".join([
                r.event_id, r.params_string(), str(r.trials),
                repr(float(r.empirical_failure_rate)),
                repr(float(r.theoretical_bound)),
                "true" if r.passed else "false",
            ]) + "\n")
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.event_id}: empirical={r.empirical_failure_rate:.3g} "
              f"bound={r.theoretical_bound:.3g} trials={r.trials}")
    return 0 if all(r.passed for r in reports) else 1


def _bench_grid(cfg: Dict[str, str], args) -> ExperimentGrid:
    dims = _get(cfg, "bench.dims", _int_list)
    kappas = _get(cfg, "bench.kappas", _float_list, [10.0])
    ns = _get(cfg, "bench.ns", _int_list, [16])
    schemes = _get(cfg, "bench.schemes", _str_list, ["uniform"])
    seeds = _get(cfg, "bench.seeds", _int_list)
    mu = _get(cfg, "bench.mu", float, 1.0)
    eps_rel = _get(cfg, "bench.eps_rel", float, 1e-4)
    objective_seed = _get(cfg, "bench.objective_seed", int, 7)
    template = build_run_config(cfg, args.seed)
    cells = []
    for d in dims:
        for kappa in kappas:
            for n in ns:
                for scheme in schemes:
                    cell_cfg = RunConfig(
                        n=n, iterations=template.iterations, scheme=scheme,
                        step=template.step, alpha=template.alpha,
                        seed=template.seed, delta=template.delta)
                    cells.append(GridCell(
                        config_id=f"d{d}_k{kappa:g}_N{n}_{scheme}",
                        objective_kind="quadratic", d=d, mu=mu,
                        L=mu * kappa, config=cell_cfg,
                        objective_seed=objective_seed))
    try:
        return ExperimentGrid(cells=cells, seeds=seeds, eps_rel=eps_rel)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_bench(args) -> int:
    cfg = parse_config(args.config)
    grid = _bench_grid(cfg, args)
    rows, summary = run_grid(grid, jobs=args.jobs, out_dir=args.out)
    if args.verbose:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_ablate(args) -> int:
    cfg = parse_config(args.config)
    obj = build_objective_from_config(cfg)
    base = build_run_config(cfg, args.seed)
    seeds = _get(cfg, "ablate.seeds", _int_list, [base.seed])
    eps_rel = _get(cfg, "ablate.eps_rel", float, 1e-4)
    os.makedirs(args.out, exist_ok=True)
    results = {"full": [], "positive_only": []}
    for i, seed in enumerate(seeds):
        for label, pos in (("full", False), ("positive_only", True)):
            trace = run(obj, replace(base, seed=seed, positive_only=pos))
            if i == 0:
                trace.to_csv(os.path.join(args.out, f"trace_{label}.csv"))
            target = eps_rel * trace.fgap[0] if len(trace.t) else float("nan")
            q = (queries_to_target(trace, target, obj.f_star)
                 if obj.f_star is not None else None)
            results[label].append(q)
    med = {label: (float(np.median([q for q in qs if q is not None]))
                   if any(q is not None for q in qs) else None)
           for label, qs in results.items()}
    summary = {"eps_rel": eps_rel, "seeds": seeds,
               "queries_to_target": results, "median": med}
    with open(os.path.join(args.out, "ablate_summary.json"), "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.verbose:
        print(json.dumps(med, indent=2, sort_keys=True))
    return 0


def cmd_predict(args) -> int:
    kind = "strongly_convex" if args.kind in ("sc", "strongly_convex") \
        else "nonconvex" if args.kind in ("nc", "nonconvex") else None
    if kind is None:
        raise ConfigError(f"unknown kind {args.kind!r}; use sc or nc")
    if min(args.d, args.L, args.eps, args.delta_prime) <= 0:
        raise ConfigError("d, L, eps, delta-prime must be positive")
    try:
        pred = predict_complexity(kind, args.d, args.L, args.eps,
                                  args.delta_prime, mu=args.mu, c1=args.c1)
        floor_sc, floor_nc = floors(pred.n, args.d, pred.delta, args.L, args.alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"N = {pred.n}")
    print(f"T = {pred.t}")
    print(f"Q = {pred.q}")
    print(f"delta = {pred.delta!r}")
    print(f"floor_strongly_convex(alpha={args.alpha!r}) = {floor_sc!r}")
    print(f"floor_nonconvex(alpha={args.alpha!r}) = {floor_nc!r}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing / dispatch
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="config file path")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="seed override")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--trials", type=int, default=None,
                   help="Monte-Carlo trials override (verify)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankzo",
        description="Rank-based zeroth-order optimization and verification")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("optimize", cmd_optimize), ("bench", cmd_bench),
                     ("ablate", cmd_ablate)):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("verify")
    _add_common(p, config_required=False)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("predict")
    p.add_argument("--kind", required=True, help="sc (strongly convex) or nc")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta-prime", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=1e-4)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(fn=cmd_predict)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, which matches the config-error code
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
