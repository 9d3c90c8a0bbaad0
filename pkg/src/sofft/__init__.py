"""Symbolic and numeric toolkit for second-order field theories on jet bundles."""

from .multiindex import MultiIndex, enumerate_indices, enumerate_up_to, sym_factor, unit, zero
from .symexpr import (
    Expr,
    Symbol,
    diff,
    equal,
    evaluate,
    free_symbols,
    normal_form,
    render,
    substitute,
    PROVEN_EQUAL,
    PROVEN_UNEQUAL,
    PROBABLY_EQUAL,
)
from .parsing import ParseError, parse
from .jetspace import (
    Dimensions,
    JetChart,
    SectionExpr,
    dimensions,
    holonomy_check,
    iterated_total_derivative,
    prolong,
    total_derivative,
)
from .extcalc import (
    CoordSpace,
    Form,
    VectorField,
    differential,
    exterior_d,
    interior,
    pullback_by_map,
    pullback_by_section,
    pullback_generic,
    volume_form,
    wedge,
)
from .theory import (
    EquationSet,
    LagrangianProblem,
    LegendreMap,
    classify_regularity,
    euler_lagrange,
    extended_legendre,
    hessian,
    legendre_jacobian_rank,
    pairing_cs,
    poincare_cartan,
    restricted_legendre,
    unified_forms,
)
from .unified import (
    ConstraintLadder,
    MultiVectorField,
    first_constraints,
    generic_multivector,
    holonomic_multivector,
    multivector_holonomy_check,
    multivector_residuals,
    run_constraint_algorithm,
    section_equations,
)
from .hamiltonian import (
    ImageSubmanifold,
    LegendreSection,
    SectionInvariantError,
    ham_function_almost_regular,
    ham_function_regular,
    hamilton_cartan_form,
    hamilton_ddw_equations,
    image_submanifold,
    invert_diagonal_quadratic,
)
from .numcheck import Grid, finite_diff_validate, numeric_rank, residual

__version__ = "0.1.0"
