"""Mountain-pass solver and certificate suite for radial semilinear problems.

The package solves -Lap(u) + V(|x|) u = f(|x|, u) on R^N (N >= 3) for
potentials that may vanish at infinity, by splicing a tail-clamped copy of f
beyond a chosen radius, running a path-deformation (mountain-pass) solver on
the radial discretization, and then certifying a posteriori that the computed
profile solves the original problem (sup bound, decay envelope, tail
consistency, energy bounds, admissible-coefficient thresholds).
"""

from .problem_model import (
    ProblemSpec,
    HypothesisReport,
    HypothesisViolation,
    ConstantPotential,
    InversePowerPotential,
    GaussianWellPotential,
    QuadraticWellPotential,
    ExpDecayPotential,
    Modulation,
    PowerNonlinearity,
    ExpThresholdNonlinearity,
    sobolev_constant,
    sphere_area,
    ball_volume,
    omega_stats,
    check_hypotheses,
    growth_constant_near_zero,
    ar_defect_constant,
)

from .penalization import PenalizedNonlinearity, make_penalized, penalty_ratio
from .radial import DiscreteEnergy, RadialGrid, build_grid
from .mountain_pass import (
    RadialBump,
    SolveResult,
    ball_bump,
    shell_partition,
    seed_bump,
    find_endpoint_e,
    estimate_beta_rho,
    mpa_solve,
    shooting_oracle,
    envelope_peak,
    compute_d,
    growth_floor,
    default_level_bound,
)
from .certificates import (
    CertificateReport,
    CheckRecord,
    EnergyBounds,
    MoserConstants,
    Thresholds,
    apriori_chain,
    certificate_report,
    check_consistency,
    check_decay,
    check_norm_bound,
    energy_bounds,
    moser_constants,
    moser_diagnostic,
    multi_bump_D_l,
    sweep_check,
    sweep_pair_record,
    thresholds,
    trend_verdict,
)
from .config import ConfigError, RunConfig, parse_config
from .pipeline import (
    Report,
    StageError,
    emit_profile,
    read_profile_csv,
    run_certify,
    run_check,
    run_pipeline,
    run_sweep,
    run_thresholds,
    write_profile_csv,
)

__version__ = "0.1.0"
