"""Pseudospectral laboratory for the mass-critical wave flow on a periodic
box, its Schrodinger low-frequency limit, and the attached variational
machinery (ground states, threshold functionals, resonance constants).
"""

__version__ = "0.1.0"

from .spectral import (  # noqa: F401
    GridSpec,
    MultiplierSymbol,
    SpectralField,
    apply_multiplier,
    dilate_closed_form,
    dispersion_gap,
    free_propagate,
    littlewood_paley,
    lowpass_symbol,
    make_grid,
    sample_closed_form,
    translate,
)
from .symmetry import (  # noqa: F401
    TubePartition,
    lorentz_boost_fourier,
    lorentz_frequency_map,
    tube_partition,
)
from .nonlinearity import (  # noqa: F401
    CoefficientTable,
    NonlinearityParams,
    build_table,
    c_d_gamma,
    c_d_quadrature,
    expansion_partial_sum,
    f_complex,
    f_real,
    g_coefficient,
    resonant_average,
)
from .ground_state import (  # noqa: F401
    RadialProfile,
    embed_radial,
    gn_ratio,
    ground_state_cached,
    nls_ground_profile,
    solve_ground_state,
)
from .functionals import (  # noqa: F401
    EnergyReport,
    energy,
    is_admissible,
    k0,
    k1,
    k_functional,
    momentum,
    scattering_size,
    threshold_predicates,
)
from .evolution import (  # noqa: F401
    StepperConfig,
    TrajectoryRecord,
    concavity_diagnostic,
    evolve,
    exterior_mass,
    step_nlkg,
    step_nls,
)
from .limits import (  # noqa: F401
    ErrorLedger,
    LimitRunConfig,
    approximate_solution,
    build_profile,
    dichotomy_scan,
    error_ledger,
    nls_limit_error,
    propagator_convergence,
    rate_fit,
    run_error_ledger,
)
from .config import RunConfig, parse_config, default_config, ConfigError  # noqa: F401
