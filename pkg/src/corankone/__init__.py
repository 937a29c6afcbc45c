"""Symbolic toolkit for corank-one Poisson structures on coordinate charts.

The package provides an exact scalar-expression field (`expr`), the graded
exterior algebra of forms and multivector fields with the operators of
foliated Poisson geometry (`calculus`), structure analysis and adapted
defining forms (`poisson`), the obstruction/modular invariants
(`invariants`), transversally vanishing extensions and product families
(`bgeom`), plus a batch CLI (`cli`) with bundled examples (`corpus`).
"""

__version__ = "0.1.0"

from .expr import (  # noqa: F401
    Chart,
    FuncGen,
    ScalarExpr,
    Verdict,
    VerdictKind,
    ZeroTester,
    apply_function,
    cos,
    derive,
    exp,
    is_zero,
    log,
    parse_scalar,
    rational,
    simplify,
    sin,
    symbol,
)
from .calculus import (  # noqa: F401
    ChartMap,
    DiffForm,
    MultiVector,
    VectorField,
    apply_form,
    basis_form,
    basis_vector,
    ext_deriv,
    exterior_divide,
    interior,
    is_zero_graded,
    leafwise_equal,
    lie_derivative,
    parse_graded,
    power,
    pullback,
    scalar_form,
    schouten,
    volume_form,
    wedge,
    zero_form,
    zero_multivector,
)
from .poisson import (  # noqa: F401
    CorankReport,
    PoissonStructure,
    adapted_forms,
    corank_evidence,
    hamiltonian_vf,
    invert_bivector,
    invert_twoform,
    jacobi_check,
    linear_solve,
)
from .invariants import (  # noqa: F401
    ObstructionCertificate,
    ObstructionReport,
    ObstructionResult,
    PeriodWitness,
    TransversePoissonReport,
    build_obstruction_report,
    check_transverse_poisson,
    check_weinstein_identity,
    compute_beta,
    compute_mu,
    first_obstruction,
    godbillon_vey,
    modular_field,
    rescaled_modular_verdict,
    second_obstruction,
    unimodularity_check,
    verify_certificate,
)
from .bgeom import (  # noqa: F401
    BExtension,
    BTransversalityReport,
    ProductBPoisson,
    b_transversality_check,
    build_product_bpoisson,
    extend_to_b,
    mapping_torus_check,
)
