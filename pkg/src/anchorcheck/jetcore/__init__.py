"""Exact jet-space calculus over the Gaussian rationals."""

from .calculus import (
    EvolutionaryField,
    FieldDependentCoefficientError,
    LinDiffOperator,
    MissingCharacteristicError,
    NonLinearError,
    UnknownFieldError,
    commutator,
    euler_operator,
    formal_adjoint,
    is_total_divergence,
    multiplet_add,
    multiplet_is_zero,
    operator_from_linear,
    pairing,
    prolong,
    total_derivative,
    variational_derivatives,
)
from .gaussian import I, ONE, ZERO, GaussianRational, gr
from .jets import (
    DIRECTIONS,
    NO_DERIVS,
    Coordinate,
    DerivativeDirection,
    FieldSpec,
    JetVariable,
    conjugate_direction,
    derivs_of,
    direction,
    multisets,
    scalar_symbol,
)
from .linsolve import Echelon, solve_in_span
from .onshell import OnShellResult, reduce_on_shell, witness_combination
from .poly import JetPolynomial, const, jet, monomial_str, var

__all__ = [name for name in dir() if not name.startswith("_")]
