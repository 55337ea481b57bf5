"""Certified rational lower bounds for polynomials via WSOS dual certificates.

The package computes lower bounds c with t - c nonnegative on [-1, 1]
(or on the semialgebraic set of a custom cone), together with exact
rational certificates that a third party can re-check independently:

    from wsosbound import build_interval_cone, solve, verify_exact

    cone = build_interval_cone(2)
    c, cert, trace = solve([1, -1, 1, 1, -1], cone)
    assert verify_exact(cone, [1, -1, 1, 1, -1], Fraction(c), cert.x)
"""

from .barrier import (
    BarrierContext,
    NotInteriorError,
    barrier_value,
    dual_local_norm,
    gradient,
    hessian,
    local_norm,
)
from .bounds import (
    InvalidStartError,
    NoCertifiableBoundError,
    best_bound_exact,
    best_bound_quadratic,
    quadratic_coefficients,
)
from .certificates import (
    CertificateSearchError,
    DualCertificate,
    GramCertificate,
    NotCertifiedError,
    certifies,
    corollary_guard,
    gradient_certificate_of,
    gram_certificate,
    gram_matrix,
    sufficient_cone_check,
)
from .cones import (
    BlockSymMatrix,
    ConeError,
    ConeOperator,
    build_interval_cone,
    build_interval_cone_odd,
    evaluate_at_zero,
    lambda_apply,
    lambda_adjoint,
    load_cone,
)
from .constants import (
    ConstantsError,
    ConvergenceConstants,
    general_constants,
    k2_general,
    k3_gershgorin,
    rho,
    univariate_C,
    univariate_flattening_gram,
)
from .rational import (
    InvalidDenominatorError,
    RationalError,
    SosDecomposition,
    SosTerm,
    expand_decomposition,
    float_to_rational,
    ldlt_rational,
    round_certificate,
    sos_decomposition,
    verify_exact,
)
from .solver import (
    NumericFailureError,
    SolverConfig,
    SolverError,
    SolverTrace,
    TraceRecord,
    bound_update,
    initialize,
    newton_step,
    solve,
)

__version__ = "1.0.0"

__all__ = [
    "BarrierContext",
    "BlockSymMatrix",
    "CertificateSearchError",
    "ConeError",
    "ConeOperator",
    "ConstantsError",
    "ConvergenceConstants",
    "DualCertificate",
    "GramCertificate",
    "InvalidDenominatorError",
    "InvalidStartError",
    "NoCertifiableBoundError",
    "NotCertifiedError",
    "NotInteriorError",
    "NumericFailureError",
    "RationalError",
    "SolverConfig",
    "SolverError",
    "SolverTrace",
    "SosDecomposition",
    "SosTerm",
    "TraceRecord",
    "barrier_value",
    "best_bound_exact",
    "best_bound_quadratic",
    "bound_update",
    "build_interval_cone",
    "build_interval_cone_odd",
    "certifies",
    "corollary_guard",
    "dual_local_norm",
    "evaluate_at_zero",
    "expand_decomposition",
    "float_to_rational",
    "general_constants",
    "gradient",
    "gradient_certificate_of",
    "gram_certificate",
    "gram_matrix",
    "hessian",
    "initialize",
    "k2_general",
    "k3_gershgorin",
    "lambda_adjoint",
    "lambda_apply",
    "ldlt_rational",
    "load_cone",
    "local_norm",
    "newton_step",
    "quadratic_coefficients",
    "rho",
    "round_certificate",
    "solve",
    "sos_decomposition",
    "sufficient_cone_check",
    "univariate_C",
    "univariate_flattening_gram",
    "verify_exact",
]
