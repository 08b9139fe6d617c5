"""Zero sets of random analytic functions on the hyperbolic disk.

Exact covariance identities, certified series truncations, two root
methods with matching contracts, and seeded Monte Carlo experiments for
joint zero-intensity limits, all driven by one CLI (``hyperzero``).
"""

__version__ = "0.1.0"

from .coeffs import (
    CoefficientLaw,
    MomentReport,
    SeededStream,
    derive_stream_index,
    sample_coefficients,
    verify_moments,
)
from .errors import (
    ConfigInvalid,
    ContourTooClose,
    DegenerateInput,
    DuplicatePoints,
    GeometryMismatch,
    HyperzeroError,
    InsufficientHits,
    InvalidBallFamily,
    InvalidDiskPoint,
    LengthMismatch,
    NonConvergence,
    OutOfCertifiedDisk,
    PolicyInfeasible,
    QuadratureUnresolved,
    TrialFailure,
    UnsupportedExponent,
)
from .hypgeom import (
    DiskPoint,
    KernelMatrix,
    as_complex,
    as_disk_point,
    bergman_kernel,
    cross_covariance,
    delta,
    kernel_determinant,
    mobius,
    mobius_derivative,
    mobius_image_circle,
    mobius_inverse,
    pseudo_hyperbolic_distance,
    q_covariance,
)
from .roots import RootConfig, Zero, ZeroSet, count_zeros_in_disk, count_zeros_robust, find_roots
from .series import (
    TruncatedSeries,
    TruncationPolicy,
    alpha_coefficients,
    alpha_power_sum,
    evaluate,
    evaluate_derivative,
    pushforward_evaluate,
    required_degree,
    tail_rms_bound,
)
from .pointproc import (
    AnnulusStat,
    BallFamily,
    CltSummary,
    CorrelationEstimate,
    ExtrapolationReport,
    IndependenceReport,
    IntensityProfile,
    clt_statistic_sample,
    correlation_limit,
    independence_experiment,
    intensity_profile,
    joint_hit_probability,
)
from .harness import (
    EXPERIMENTS,
    ComparisonReport,
    ExperimentConfig,
    ResultRecord,
    compare,
    run,
)
