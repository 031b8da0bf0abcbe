import os
import sys
from fractions import Fraction

import sympy
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from anchorcheck.jetcore import Coordinate, JetPolynomial, JetVariable
from anchorcheck.jetcore.gaussian import GaussianRational

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
    derandomize=True,
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")

small_fractions = st.fractions(min_value=-5, max_value=5, max_denominator=4)
gaussians = st.builds(GaussianRational, small_fractions, small_fractions)
derivs = st.tuples(*[st.integers(0, 2)] * 4).filter(lambda t: sum(t) <= 3)


def jet_variables(fields=("u",), conj=False, components=((0, 0),)):
    return st.builds(
        JetVariable,
        st.sampled_from(fields),
        st.sampled_from((False, True)) if conj else st.just(False),
        st.sampled_from(components),
        derivs,
    )


def polynomials(variables=None, max_terms=4, max_degree=3, coeffs=gaussians, coordinates=False):
    variables = variables if variables is not None else jet_variables()
    atoms = st.one_of(variables, st.builds(Coordinate, st.integers(0, 3))) if coordinates else variables

    @st.composite
    def build(draw):
        n = draw(st.integers(0, max_terms))
        terms = []
        for _ in range(n):
            c = draw(coeffs)
            k = draw(st.integers(0, max_degree))
            m = JetPolynomial.constant(c)
            for _ in range(k):
                m = m * JetPolynomial.variable(draw(atoms))
            terms.append(m)
        return JetPolynomial.sum(terms)

    return build()


# -- sympy bridge ---------------------------------------------------------------

X = sympy.symbols("x0:4")


def sympy_coeff(c: GaussianRational):
    return sympy.Rational(c.re.numerator, c.re.denominator) + sympy.I * sympy.Rational(c.im.numerator, c.im.denominator)


def sympy_symbol(v):
    if isinstance(v, Coordinate):
        return X[v.direction]
    return sympy.Symbol(f"{v.field}{'_c' if v.conj else ''}_{''.join(map(str, v.component))}_{''.join(map(str, v.derivs))}")


def to_sympy(p: JetPolynomial):
    total = sympy.Integer(0)
    for m, c in p:
        term = sympy_coeff(c)
        for v, e in m:
            term *= sympy_symbol(v) ** e
        total += term
    return sympy.expand(total)


def to_sympy_functions(p: JetPolynomial, funcs: dict):
    """Map jets ``u_J`` to derivatives of sympy functions of ``x0..x3``."""
    total = sympy.Integer(0)
    for m, c in p:
        term = sympy_coeff(c)
        for v, e in m:
            if isinstance(v, Coordinate):
                term *= X[v.direction] ** e
                continue
            f = funcs[(v.field, v.conj, v.component)]
            args = [x for x, n in zip(X, v.derivs) for _ in range(n)]
            term *= (sympy.diff(f, *args) if args else f) ** e
        total += term
    return total


def fraction(x) -> Fraction:
    return Fraction(x)


sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
