"""Quantized-vortex dynamics lab for the 2D complex relaxation equation.

Field evolution by second-order time splitting, reduced point-vortex
dynamics driven by the renormalized energy, and the detection/tracking
tooling to compare the two, on rectangular domains under wall-value or
zero-flux conditions.
"""

from .field import DIRICHLET, NEUMANN, ComplexField, Energies, field_distance, gl_energy
from .grid import Grid2D, make_grid
from .harmonic import (
    BoundaryFlux,
    HarmonicField,
    grad_at,
    phase_mismatch_dirichlet,
    phase_mismatch_neumann,
    solve_laplace_dirichlet,
    solve_laplace_neumann,
    stream_function_dirichlet,
    stream_function_neumann,
)
from .initial import (
    BoundaryPhase,
    PhaseMode,
    VortexSpec,
    compose_initial_data,
    dirichlet_boundary_values,
    neumann_phase_shift,
    polar_angle,
)
from .radial import RadialProfile, get_profile, radial_vortex_profile
from .rdl import (
    RDLState,
    StopEvent,
    integrate_rdl,
    rdl_rhs_dirichlet,
    rdl_rhs_neumann,
    renormalized_energy,
)
from .scenarios import ScenarioConfig, get_scenario, list_scenarios
from .solver import (
    EvolutionRecord,
    SolverParams,
    evolve,
    linear_step_dirichlet,
    linear_step_neumann,
    nonlinear_step,
    strang_step,
)
from .tracking import DetectedVortex, TrajectorySet, center_discrepancy, detect_vortices, track

__version__ = "0.1.0"
