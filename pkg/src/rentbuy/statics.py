"""Comparative statics: sensitivities, parameter sweeps, threshold maps.

Every cell of every sweep or map is an independent closed-form solve; the
characteristic root is recomputed whenever the perturbed parameter touches the
ratio dynamics or the discount rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .boundary import (
    INTERIOR,
    BuyValue,
    HouseholdEnv,
    ThresholdSolution,
    solve_for_environment,
)
from .dynamics import RatioDynamics
from .errors import SensitivityUndefinedError

# Parameters a sweep axis or series override may touch.
_ENV_PARAMS = ("r", "lam", "k", "delta", "h", "c_op", "K_abs", "hc_flow")
_DYN_PARAMS = ("mu_x", "sigma_x")
_ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class SweepSeries:
    label: str
    x_star: Tuple[float, ...]  # nan marks a degenerate cell
    regime: Tuple[str, ...]


@dataclass(frozen=True)
class SweepResult:
    axis_name: str
    axis_values: Tuple[float, ...]
    series: Tuple[SweepSeries, ...]


@dataclass(frozen=True)
class ThresholdMap:
    lambda_grid: Tuple[float, ...]
    sigma_grid: Tuple[float, ...]
    x_star_grid: np.ndarray  # shape (len(lambda_grid), len(sigma_grid)), nan = degenerate
    regime_grid: Tuple[Tuple[str, ...], ...]
    markers: Tuple[Tuple[str, float, float], ...]


def _canonical(param: str) -> str:
    name = _ALIASES.get(param, param)
    if name not in _ENV_PARAMS + _DYN_PARAMS:
        raise ValueError(f"unknown parameter {param!r}")
    return name


def apply_parameter(
    env: HouseholdEnv, d: RatioDynamics, param: str, value: float
) -> Tuple[HouseholdEnv, RatioDynamics]:
    """Return (env, d) with one named parameter replaced."""
    name = _canonical(param)
    if name in _DYN_PARAMS:
        return env, replace(d, **{name: value})
    return replace(env, **{name: value}), d


def _solve_cell(env: HouseholdEnv, d: RatioDynamics) -> ThresholdSolution:
    sol, _, _ = solve_for_environment(env, d)
    return sol


def threshold_sensitivity(
    env: HouseholdEnv,
    d: RatioDynamics,
    param: str,
    step: float = 1e-3,
) -> float:
    """Central-difference dX*/dparam at the given point (step relative)."""
    name = _canonical(param)
    base = {"sigma_x": d.sigma_x, "mu_x": d.mu_x}.get(name, getattr(env, name, None))
    if base is None or base == 0:
        raise SensitivityUndefinedError(f"relative step undefined at {param} = {base}")
    h = abs(base) * step
    sols = []
    for value in (base - h, base + h):
        e2, d2 = apply_parameter(env, d, name, value)
        sol = _solve_cell(e2, d2)
        if sol.regime != INTERIOR:
            raise SensitivityUndefinedError(
                f"perturbed point {param} = {value} is degenerate ({sol.regime})"
            )
        sols.append(sol)
    return (sols[1].x_star - sols[0].x_star) / (2.0 * h)


def sweep_threshold(
    env: HouseholdEnv,
    d: RatioDynamics,
    axis: str,
    grid: Sequence[float],
    series_overrides: Optional[Sequence[Tuple[str, Dict[str, float]]]] = None,
) -> SweepResult:
    """Threshold along one parameter axis, optionally for several override series."""
    axis_name = _canonical(axis)
    values = tuple(float(v) for v in grid)
    if not values:
        raise ValueError("sweep grid must be nonempty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("sweep grid must be strictly increasing")
    if not series_overrides:
        series_overrides = [("base", {})]

    out: List[SweepSeries] = []
    for label, overrides in series_overrides:
        e0, d0 = env, d
        for name, val in overrides.items():
            e0, d0 = apply_parameter(e0, d0, name, val)
        xs, regimes = [], []
        for v in values:
            e1, d1 = apply_parameter(e0, d0, axis_name, v)
            sol = _solve_cell(e1, d1)
            xs.append(sol.x_star if sol.regime == INTERIOR else math.nan)
            regimes.append(sol.regime)
        out.append(SweepSeries(label=label, x_star=tuple(xs), regime=tuple(regimes)))
    return SweepResult(axis_name=axis_name, axis_values=values, series=tuple(out))


def threshold_map(
    env: HouseholdEnv,
    d_base: RatioDynamics,
    lambda_grid: Sequence[float],
    sigma_grid: Sequence[float],
    markers: Sequence[Tuple[str, float, float]] = (),
) -> ThresholdMap:
    """Threshold on the full hazard x volatility Cartesian grid."""
    lams = tuple(float(v) for v in lambda_grid)
    sigs = tuple(float(v) for v in sigma_grid)
    for name, g in (("lambda", lams), ("sigma", sigs)):
        if not g:
            raise ValueError(f"{name} grid must be nonempty")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ValueError(f"{name} grid must be strictly increasing")

    xs = np.full((len(lams), len(sigs)), np.nan)
    regimes: List[Tuple[str, ...]] = []
    for i, lam in enumerate(lams):
        row: List[str] = []
        for j, sig in enumerate(sigs):
            e1, d1 = apply_parameter(env, d_base, "lam", lam)
            e1, d1 = apply_parameter(e1, d1, "sigma_x", sig)
            sol = _solve_cell(e1, d1)
            if sol.regime == INTERIOR:
                xs[i, j] = sol.x_star
            row.append(sol.regime)
        regimes.append(tuple(row))
    return ThresholdMap(
        lambda_grid=lams,
        sigma_grid=sigs,
        x_star_grid=xs,
        regime_grid=tuple(regimes),
        markers=tuple((str(n), float(a), float(b)) for n, a, b in markers),
    )


def linearized_difference(
    bv: BuyValue, r: float, x_grid: Sequence[float]
) -> List[Tuple[float, float]]:
    """Buy-minus-rent-forever difference D(x) = a + m*x + 1/r on a grid."""
    out = []
    for x in x_grid:
        if x <= 0:
            raise ValueError("x_grid must be positive")
        out.append((float(x), bv.a + bv.m * x + 1.0 / r))
    return out
