"""Impulse response of a cylindrical microfluidic channel with Poiseuille flow.

Analytic radial and axial laws for a molecule released from a point emitter,
plus a Brownian particle simulator to check them against.
"""
from .axial import (
    AxialModel,
    axial_cdf_uniform,
    branch_gap,
    build_model,
    critical_radius,
    cumulative_hits,
    expected_displacement,
    hit_rate,
    prob_velocity_exceeds,
    required_velocity,
    time_grid,
)
from .channel import ChannelParams, DerivedNumbers, derive_numbers, flow_velocity, t_floor
from .harness import (
    PRESETS,
    ComparisonReport,
    ScenarioConfig,
    ScenarioError,
    SweepError,
    load_scenario,
    run_compare,
    sweep,
    write_csv,
)
from .montecarlo import (
    ParticleState,
    SimConfig,
    SimResult,
    empirical_cumulative_hits,
    radial_histogram,
    simulate,
    step,
)
from .radial import (
    RadialSeries,
    UnconvergedSeriesWarning,
    build_series,
    mean_flow_velocity,
    radial_cdf,
    radial_cdf_time_average,
    radial_density,
    radial_pdf,
    uniformity_time,
)
from .specfun import ConvergenceError, DomainError, QuadratureSpec

__version__ = "0.1.0"

__all__ = [
    "axial_cdf_uniform",
    "AxialModel",
    "branch_gap",
    "build_model",
    "build_series",
    "ChannelParams",
    "ComparisonReport",
    "ConvergenceError",
    "critical_radius",
    "cumulative_hits",
    "derive_numbers",
    "DerivedNumbers",
    "DomainError",
    "empirical_cumulative_hits",
    "expected_displacement",
    "flow_velocity",
    "hit_rate",
    "load_scenario",
    "mean_flow_velocity",
    "ParticleState",
    "PRESETS",
    "prob_velocity_exceeds",
    "QuadratureSpec",
    "radial_cdf",
    "radial_cdf_time_average",
    "radial_density",
    "radial_histogram",
    "radial_pdf",
    "RadialSeries",
    "required_velocity",
    "run_compare",
    "ScenarioConfig",
    "ScenarioError",
    "SimConfig",
    "SimResult",
    "simulate",
    "step",
    "sweep",
    "SweepError",
    "t_floor",
    "time_grid",
    "UnconvergedSeriesWarning",
    "uniformity_time",
    "write_csv",
]
