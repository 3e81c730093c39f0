"""Batch CLI: threshold solves, figure data, Monte Carlo verification.

Exit codes: 0 success, 2 usage, 3 validation failure, 4 degenerate regime
where a threshold is required, 5 output I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import statics
from .boundary import (
    INTERIOR,
    break_even_ratio,
    hjb_residual,
    solve_for_environment,
    value_function_at,
    verify_boundary_conditions,
)
from .dynamics import MarketPrimitives, RatioDynamics, reduce_to_ratio
from .errors import ModelError, ScenarioError, UnsupportedRegimeError
from .mc import PathConfig, evaluate_threshold_policy, grid_search_threshold
from .scenario import (
    Scenario,
    builtin_preset,
    load_scenario,
    preset_names,
    scenario_hash,
    with_seed,
)
from .tables import Table, fmt_num, write_table

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_DEGENERATE = 4
EXIT_IO = 5


def parse_grid(spec: str) -> np.ndarray:
    """Inclusive 'start:stop:count' grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ScenarioError(f"grid {spec!r} must look like start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ScenarioError(f"grid {spec!r} must look like start:stop:count") from None
    if count < 1:
        raise ScenarioError(f"grid {spec!r}: count must be >= 1")
    return np.linspace(start, stop, count)


def _ratio_dynamics(sc: Scenario) -> RatioDynamics:
    if isinstance(sc.market, RatioDynamics):
        return sc.market
    return reduce_to_ratio(sc.market)


def _scenario_from_args(args) -> Scenario:
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise ScenarioError("--config and --preset are mutually exclusive")
    if getattr(args, "config", None):
        sc = load_scenario(args.config)
    else:
        sc = load_scenario({"market": {"preset": getattr(args, "preset", None) or "atlanta"}})
    if getattr(args, "seed", None) is not None:
        sc = with_seed(sc, args.seed)
    return sc


def _base_metadata(sc: Scenario) -> List[Tuple[str, object]]:
    meta: List[Tuple[str, object]] = [
        ("scenario_hash", scenario_hash(sc)),
        ("seed", sc.sim.seed),
        ("market_provenance", sc.market_provenance),
    ]
    if sc.preset_name:
        meta.append(("preset", sc.preset_name))
    return meta


def _solve(sc: Scenario):
    d = _ratio_dynamics(sc)
    sol, bv, roots = solve_for_environment(sc.household, d)
    return sol, bv, roots, d


def cmd_threshold(args) -> Tuple[Table, int]:
    sc = _scenario_from_args(args)
    sol, bv, _, d = _solve(sc)
    table = Table(columns=("quantity", "value"), rows=[], metadata=_base_metadata(sc))
    table.rows.append(("regime", sol.regime))
    table.rows.append(("gamma", sol.gamma))
    if sol.regime != INTERIOR:
        table.rows.append(("diagnostic", sol.diagnostic))
        return table, EXIT_DEGENERATE
    vm, sp = verify_boundary_conditions(sol, bv)
    table.rows.append(("x_star", sol.x_star))
    table.rows.append(("a_coef", sol.a_coef))
    table.rows.append(("break_even_ratio", break_even_ratio(sc.household, bv)))
    table.rows.append(("value_match_residual", vm))
    table.rows.append(("smooth_paste_residual", sp))
    grid = [sol.x_star * f for f in (1.2, 1.5, 3.0, 6.0)]
    table.rows.append(("hjb_max_relative_residual", hjb_residual(sol, bv, sc.household.r, d, grid)))
    return table, EXIT_OK


def cmd_value(args) -> Tuple[Table, int]:
    sc = _scenario_from_args(args)
    sol, bv, _, _ = _solve(sc)
    table = Table(columns=("x", "v", "d"), rows=[], metadata=_base_metadata(sc))
    if sol.regime != INTERIOR:
        table.add_meta("regime", sol.regime)
        table.rows.append((0.0, float("nan"), float("nan")))
        return table, EXIT_DEGENERATE
    table.add_meta("x_star", sol.x_star)
    xs = parse_grid(args.x_grid)
    diffs = statics.linearized_difference(bv, sc.household.r, xs)
    for x, dval in diffs:
        table.rows.append((x, value_function_at(sol, bv, x), dval))
    return table, EXIT_OK


def _parse_series(specs: Optional[List[str]]) -> Optional[List[Tuple[str, Dict[str, float]]]]:
    if not specs:
        return None
    out = []
    for spec in specs:
        overrides: Dict[str, float] = {}
        for piece in spec.split(","):
            if "=" not in piece:
                raise ScenarioError(f"series {spec!r} must look like name=value[,name=value]")
            name, _, val = piece.partition("=")
            try:
                overrides[name.strip()] = float(val)
            except ValueError:
                raise ScenarioError(f"series {spec!r}: {val!r} is not a number") from None
        out.append((spec, overrides))
    return out


def cmd_sweep(args) -> Tuple[Table, int]:
    sc = _scenario_from_args(args)
    d = _ratio_dynamics(sc)
    result = statics.sweep_threshold(
        sc.household, d, args.axis, parse_grid(args.grid), _parse_series(args.series)
    )
    table = Table(columns=("axis", "label", "x_star", "regime"), rows=[], metadata=_base_metadata(sc))
    table.add_meta("axis_name", result.axis_name)
    for series in result.series:
        for v, xs, regime in zip(result.axis_values, series.x_star, series.regime):
            table.rows.append((v, series.label, xs, regime))
    return table, EXIT_OK


def cmd_map(args) -> Tuple[Table, int]:
    sc = _scenario_from_args(args)
    d = _ratio_dynamics(sc)
    markers = []
    for name in preset_names():
        p = builtin_preset(name)
        markers.append((name, p.lam, p.ratio.sigma_x))
    result = statics.threshold_map(
        sc.household, d, parse_grid(args.lam), parse_grid(args.sigma), markers
    )
    table = Table(columns=("lambda", "sigma", "x_star", "regime"), rows=[], metadata=_base_metadata(sc))
    for name, lam, sig in result.markers:
        prov = builtin_preset(name).provenance
        table.add_meta(
            f"marker_{name}", f"lambda:{fmt_num(lam)};sigma:{fmt_num(sig)};provenance:{prov}"
        )
    for i, lam in enumerate(result.lambda_grid):
        for j, sig in enumerate(result.sigma_grid):
            table.rows.append((lam, sig, float(result.x_star_grid[i, j]), result.regime_grid[i][j]))
    return table, EXIT_OK


def _side_scenario(spec: str, seed: Optional[int]) -> Scenario:
    if spec in preset_names():
        sc = load_scenario({"market": {"preset": spec}})
    else:
        sc = load_scenario(spec)
    return with_seed(sc, seed) if seed is not None else sc


def cmd_compare(args) -> Tuple[Table, int]:
    left = _side_scenario(args.left, args.seed)
    right = _side_scenario(args.right, args.seed)
    table = Table(columns=("x", "d_left", "d_right"), rows=[])
    sides = []
    for tag, sc in (("left", left), ("right", right)):
        sol, bv, _, _ = _solve(sc)
        table.add_meta(f"scenario_hash_{tag}", scenario_hash(sc))
        table.add_meta(f"provenance_{tag}", sc.market_provenance)
        if sol.regime != INTERIOR:
            table.add_meta(f"regime_{tag}", sol.regime)
            table.rows.append((0.0, float("nan"), float("nan")))
            return table, EXIT_DEGENERATE
        table.add_meta(f"x_star_{tag}", sol.x_star)
        sides.append((sc, bv))
    xs = parse_grid(args.x_grid)
    d_left = statics.linearized_difference(sides[0][1], sides[0][0].household.r, xs)
    d_right = statics.linearized_difference(sides[1][1], sides[1][0].household.r, xs)
    for (x, dl), (_, dr) in zip(d_left, d_right):
        table.rows.append((x, dl, dr))
    return table, EXIT_OK


def _sim_config(sc: Scenario, args) -> PathConfig:
    cfg = sc.sim
    for name in ("n_paths", "dt", "horizon"):
        v = getattr(args, name, None)
        if v is not None:
            cfg = replace(cfg, **{name: v})
    return cfg


def cmd_simulate(args) -> Tuple[Table, int]:
    sc = _scenario_from_args(args)
    d = _ratio_dynamics(sc)
    if args.threshold is not None:
        thr = args.threshold
    else:
        sol, _, _, _ = _solve(sc)
        if sol.regime != INTERIOR:
            table = Table(columns=("quantity", "value"), rows=[("regime", sol.regime)],
                          metadata=_base_metadata(sc))
            return table, EXIT_DEGENERATE
        thr = sol.x_star
    cfg = _sim_config(sc, args)
    est = evaluate_threshold_policy(d, sc.household, args.x0, thr, cfg)
    table = Table(columns=("quantity", "value"), rows=[], metadata=_base_metadata(sc))
    table.add_meta("threshold", thr)
    table.add_meta("x0", args.x0)
    table.rows.extend([
        ("mean", est.mean),
        ("std_error", est.std_error),
        ("n_paths", est.n_paths),
        ("fraction_stopped", est.fraction_stopped),
        ("fraction_unresolved", est.fraction_unresolved),
        ("horizon_warning", est.horizon_warning),
    ])
    return table, EXIT_OK


def cmd_verify(args) -> Tuple[Table, int]:
    sc = _scenario_from_args(args)
    d = _ratio_dynamics(sc)
    sol, _, _, _ = _solve(sc)
    if sol.regime != INTERIOR:
        table = Table(columns=("quantity", "value"), rows=[("regime", sol.regime)],
                      metadata=_base_metadata(sc))
        return table, EXIT_DEGENERATE
    cfg = _sim_config(sc, args)
    result = grid_search_threshold(d, sc.household, args.x0, parse_grid(args.grid), cfg)
    table = Table(columns=("threshold", "value", "std_error"), rows=[], metadata=_base_metadata(sc))
    table.add_meta("x0", args.x0)
    table.add_meta("x_star_closed_form", sol.x_star)
    table.add_meta("argmax_threshold", result.best_threshold)
    table.add_meta("relative_gap", result.best_threshold / sol.x_star - 1.0)
    table.add_meta("flat_within_noise", result.flat_within_noise)
    for thr, mean, se in zip(result.thresholds, result.means, result.std_errors):
        table.rows.append((float(thr), float(mean), float(se)))
    return table, EXIT_OK


_HANDLERS = {
    "threshold": cmd_threshold,
    "value": cmd_value,
    "sweep": cmd_sweep,
    "map": cmd_map,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def _add_common(sub: argparse.ArgumentParser, scenario: bool = True) -> None:
    if scenario:
        sub.add_argument("--config", help="scenario config (JSON path or inline JSON)")
        sub.add_argument("--preset", help="builtin market preset name")
    sub.add_argument("--seed", type=int, help="master seed override (default 42)")
    sub.add_argument("--out", help="output path (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rentbuy",
        description="Rent-versus-buy thresholds on the price-to-rent ratio under relocation hazard.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="solve the buying threshold")
    _add_common(p)

    p = sub.add_parser("value", help="value function and linearized difference on an x-grid")
    _add_common(p)
    p.add_argument("--x-grid", dest="x_grid", default="5:40:71")

    p = sub.add_parser("sweep", help="threshold along one parameter axis")
    _add_common(p)
    p.add_argument("--axis", default="lambda")
    p.add_argument("--grid", default="0.05:0.30:26")
    p.add_argument("--series", action="append", help="labeled overrides, e.g. sigma_x=0.25")

    p = sub.add_parser("map", help="threshold over the hazard x volatility grid")
    _add_common(p)
    p.add_argument("--lambda", dest="lam", default="0.05:0.30:21")
    p.add_argument("--sigma", default="0.10:0.35:21")

    p = sub.add_parser("compare", help="linearized differences for two scenarios")
    p.add_argument("--left", default="atlanta", help="preset name or config path")
    p.add_argument("--right", default="columbus", help="preset name or config path")
    p.add_argument("--x-grid", dest="x_grid", default="5:25:81")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("simulate", help="Monte Carlo policy value at a threshold")
    _add_common(p)
    p.add_argument("--x0", type=float, default=20.0)
    p.add_argument("--threshold", type=float)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)

    p = sub.add_parser("verify", help="closed form versus grid-search oracle")
    _add_common(p)
    p.add_argument("--x0", type=float, default=20.0)
    p.add_argument("--grid", default="8:18:21")
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)

    return parser


def run_command(argv: List[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        code = e.code
        return int(code) if code is not None else EXIT_OK
    try:
        table, code = _HANDLERS[args.command](args)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except UnsupportedRegimeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ModelError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        write_table(table, args.format, args.out)
    except OSError as e:
        print(f"error: cannot write output: {e}", file=sys.stderr)
        return EXIT_IO
    return code


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
