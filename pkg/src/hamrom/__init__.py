"""Structure-preserving reduced-order modeling for parametric canonical
Hamiltonian systems: paired symplectic bases (greedy, block-diagonal lift,
complex SVD), empirical interpolation of nonlinear terms, symplectic time
integration, and the experiment pipeline around them."""

from .errors import (
    ConfigError,
    DegenerateVector,
    HamromError,
    IntegrationError,
    NewtonDivergence,
    NumericalError,
    RankDeficient,
    StagnationError,
    ZeroResidual,
)
from .symplectic import (
    SqrFactors,
    SymplecticBasis,
    apply_structure_matrix,
    canonical_form,
    enrich_basis,
    sqr_decompose,
    symplectic_gram_schmidt,
    symplectic_inverse,
    symplecticity_residual,
)
from .svd import SvdResult, complex_truncated_svd, truncated_svd
from .models import (
    GridSpec,
    HamiltonianModel,
    build_nls_model,
    build_wave_model,
    bump_spline,
    periodic_laplacian,
    wave_speed_coefficient,
)
from .integrators import NewtonConfig, Trajectory, integrate, newton_solve, rk2_step, stormer_verlet_step
from .basis import (
    GreedyConfig,
    GreedyReport,
    SnapshotSet,
    collect_snapshots,
    complex_svd_basis,
    cotangent_lift_basis,
    greedy_projection_basis,
    greedy_symplectic_basis,
    hamiltonian_error_indicator,
    pod_basis,
    projection_error,
)
from .deim import (
    DeimOperator,
    build_hamiltonian_operator,
    build_interpolation_operator,
    deim_apply,
    deim_indices,
    pair_indices,
    reduced_jacobian,
    sdeim_basis,
)
from .rom import (
    ErrorSeries,
    ReducedModel,
    assemble_pod_rom,
    assemble_symplectic_rom,
    error_series,
    lift,
    lift_trajectory,
    simulate_rom,
    stable_substeps,
)
from .config import ExperimentConfig, load_config, parameter_grid, preset_names

__version__ = "0.1.0"
