"""Steady-state Casimir photons and phonons in a modulated hybrid BEC-optomechanical cavity.

The package solves the linearized three-mode (cavity, mirror, Bogoliubov
mode) quadrature dynamics under parametric modulation of the mirror spring
constant and the atomic collision rate.
"""

from .errors import (
    BoundaryNotFoundError,
    ConvergenceError,
    DCEError,
    DomainError,
    IndeterminateRegimeError,
    InfeasibleResonanceError,
    IntegrationCancelled,
    MarginalStabilityError,
    PhysicalityError,
    PoleError,
    StepSizeError,
)
from .lyapunov import (
    SteadyState,
    TimeDependentParams,
    build_drift_time_dependent,
    integrate_covariance,
    rwa_validate,
    solve_steady,
    spectral_abscissa,
)
from .model import (
    ModelParams,
    build_diffusion,
    build_drift,
    collective_mode_occupation,
    occupations,
    symplectic_eigenvalues,
)
from .spectral import (
    Regime,
    RegimeReport,
    coherent_ratio,
    collective_cooperativities,
    find_stability_boundary,
    regime_report,
    spectral_point,
)
from .sweep import PRESETS, SweepSpec, emit_csv, emit_plot, read_csv, run_preset, run_sweep

__version__ = "0.1.0"
