"""Imitate-the-better-realization (IBR) dynamics for symmetric population games."""
from .analysis import (
    EliminationTrace,
    RestPointReport,
    TwoStrategyClass,
    classify_rest_point,
    classify_two_strategy,
    find_rest_points,
    growth_rate_gap,
    iterated_elimination,
    reduced_jacobian,
    self_negation_witness,
    strict_equilibrium_inflow_check,
    strictly_dominated_pairs,
)
from .dynamics import (
    FieldKind,
    ibr_field,
    ibr_switch_rate,
    mean_field_from_rates,
    ppi_average_switch_rate,
    ppi_realized_switch_rate,
    replicator_field,
    two_strategy_polynomial,
)
from .flow import (
    OrbitVerdict,
    Trajectory,
    integrate,
    lyapunov_H,
    orbit_classify,
    poincare_returns,
    survival_probe,
)
from .game import (
    OrdinalPattern,
    PayoffMatrix,
    PopulationState,
    average_payoffs,
    negate,
    ordinal_pattern,
    parse_game,
    permute,
)
from .presets import get_preset, preset_names
from .reports import reproduce
from .stochastic import AgentPopulation, SimConfig, deviation_report, revise_once, simulate
from .svg import emit_phase_svg

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
