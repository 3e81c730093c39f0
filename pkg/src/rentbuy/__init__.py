"""Rent-versus-buy as a perpetual stopping problem on the price-to-rent ratio.

Closed-form buying thresholds under relocation hazard, comparative-statics
sweeps and maps, and Monte Carlo verification of every analytic result.
"""

from .boundary import (
    ALWAYS_BUY,
    INTERIOR,
    NO_FINITE_THRESHOLD,
    BuyValue,
    HouseholdEnv,
    ThresholdSolution,
    break_even_ratio,
    buy_value_coefficients,
    hjb_residual,
    solve_for_environment,
    solve_threshold,
    value_function_at,
    verify_boundary_conditions,
)
from .dynamics import (
    CharacteristicRoots,
    DemandRegimeSpec,
    MarketPrimitives,
    RatioDynamics,
    characteristic_residual,
    characteristic_roots,
    expected_relocation_discount,
    reduce_to_ratio,
    resale_multiplier,
)
from .errors import (
    DegenerateDynamicsError,
    DivergentResaleError,
    ModelError,
    ScenarioError,
    SensitivityUndefinedError,
    SimulationConfigError,
    UnsupportedRegimeError,
)
from .mc import (
    GridSearchResult,
    JointPathEnsemble,
    PathConfig,
    PolicyValueEstimate,
    evaluate_threshold_policy,
    grid_search_threshold,
    sample_relocation_times,
    simulate_joint_paths,
    simulate_ratio_paths,
)
from .scenario import (
    MarketPreset,
    Scenario,
    builtin_preset,
    load_scenario,
    preset_names,
    scenario_hash,
    scenario_to_dict,
    with_seed,
)
from .tables import Table, fmt_num, render_csv, render_json, write_table
from .statics import (
    SweepResult,
    SweepSeries,
    ThresholdMap,
    linearized_difference,
    sweep_threshold,
    threshold_map,
    threshold_sensitivity,
)

__version__ = "0.1.0"
