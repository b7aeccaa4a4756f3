"""spinpointer: direction estimation of N parallel spins through a
three-axis Gaussian pointer, with the measurement's information-disturbance
trade-off evaluated by deterministic quadrature."""

from .asymptotics import (
    LowerBoundPoint,
    delta_opt_formula,
    diag_radial_profile,
    epsilon_curve,
    fidelity_lower_bound,
    kraus_diagonal_element,
    optimal_scaling,
)
from .disturbance import (
    BlochReport,
    DisturbancePoint,
    bloch_post_numeric,
    bloch_z_post_closed,
    disturbance_exact,
    disturbance_lowest_order,
    disturbance_oracle_full,
    disturbance_series_copt,
    min_disturbance,
)
from .errors import CapabilityError, ConvergenceError, DomainError, NumericError
from .estimation import (
    FidelityPoint,
    GuessRule,
    OptimizeResult,
    SweepResult,
    average_fidelity,
    find_delta_opt,
    optimal_fidelity,
    strong_coupling_limit,
    sweep_delta,
)
from .pointer import (
    AmplitudeField,
    MomentumQuadrature,
    OutcomeGrid,
    PointerModel,
    QuadratureCounts,
    adaptive_outcome_grid,
    build_amplitude_field,
    build_outcome_grid,
    hemisphere_masses,
    momentum_profile,
    outcome_density,
    position_amplitudes,
    position_profile,
)
from .quadrature import ConvergenceReport, Rule1D, gauss_legendre, integrate_with_refinement
from .spincore import (
    CollectiveOperators,
    DickeVector,
    Direction,
    coherent_dicke,
    collective_operators,
    dicke_expand,
    direction_from_angles,
    direction_from_vector,
    full_tensor_rotation_oracle,
    rotated_up_amplitudes,
    score,
    su2_rotation,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
