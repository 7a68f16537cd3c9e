"""divgeom: geometry and minimization for differentiable, strictly convex
divergences on finite probability supports.

The package evaluates divergence families (squared Euclidean, KL, reverse
KL, generated quadratic/entropic families, ratio-based families, Rényi) and
their per-atom functional derivatives, builds divergence lines, balls and
inner products, and solves three minimization problems with verified
stationarity conditions: weighted centroids, projection onto a divergence
ball, and projection onto moment-constrained sets.
"""

from .core import (
    DEFAULT_CONFIG,
    FAMILIES,
    GENERATORS,
    DiscreteDistribution,
    DivergenceError,
    DivergenceSpec,
    DomainViolation,
    EmptySupport,
    GeneratorSpec,
    InvalidSpec,
    NegativeMass,
    NumericConfig,
    SupportMismatch,
    ZeroTotalMass,
    get_generator,
    make_distribution,
    make_generator,
    require_same_support,
    standard_specs,
    validate_for_family,
)
from .divergences import (
    GradientVector,
    UnsupportedDerivative,
    eval,
    fd_check_gradient,
    grad_first,
    grad_second,
)
from .geometry import (
    BallSpec,
    LinePointResult,
    ball_contains,
    inner_product,
    is_orthogonal,
    line_point,
    on_boundary,
)
from .solvers import (
    CentroidProblem,
    DimensionMismatch,
    InfeasibleConstraints,
    MomentConstraintSet,
    NonConvergence,
    SolverReport,
    bregman_centroid_vector,
    centroid,
    project_ball,
    project_moments,
)
from .verify import (
    CheckFailed,
    CheckReport,
    brute_force_minimize,
    check_convexity_on_segment,
    check_minimizer_inequality,
    check_three_point,
    run_registry_checks,
    sample_interior,
)

__version__ = "0.1.0"
