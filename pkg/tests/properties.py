"""Kernel properties shared by the unit suite and the acceptance run."""

from hypothesis import given, settings
from hypothesis import strategies as st

from anchorcheck.jetcore import (
    EvolutionaryField,
    JetPolynomial,
    JetVariable,
    LinDiffOperator,
    formal_adjoint,
    is_total_divergence,
    prolong,
    variational_derivatives,
)
from conftest import derivs, gaussians, jet_variables, polynomials

CASES = 100

two_fields = jet_variables(fields=("u", "v"), conj=True, components=((0, 0), (1, 0)))
direction = st.integers(0, 3)


def check_total_derivatives_commute(p, d1, d2):
    assert p.total_derivative(d1).total_derivative(d2) == p.total_derivative(d2).total_derivative(d1)


def check_euler_kills_divergence(p, d):
    div = p.total_derivative(d)
    assert all(e.is_zero() for e in variational_derivatives(div).values())
    assert is_total_divergence(div)


@st.composite
def operators(draw, rows=("r0", "r1"), cols=((0, 0), (1, 0)), max_order=2):
    entries = {}
    for r in rows:
        for c in cols:
            entry = {}
            for _ in range(draw(st.integers(0, 2))):
                j = draw(derivs.filter(lambda t: sum(t) <= max_order))
                entry[j] = JetPolynomial.constant(draw(gaussians))
            if entry:
                entries[(r, c)] = entry
    return LinDiffOperator(tuple(rows), tuple(cols), entries)


def check_adjoint_involution(op):
    assert formal_adjoint(formal_adjoint(op)) == op


def check_lagrange_identity(op):
    """``v.L(u) - adjoint(L)(v).u`` is a total divergence."""
    u = {c: JetPolynomial.variable(JetVariable("u", False, c)) for c in op.cols}
    v = {r: JetPolynomial.variable(JetVariable("w", False, (i, 0))) for i, r in enumerate(op.rows)}
    lu = op.apply(u)
    adj = formal_adjoint(op)
    lv = adj.apply(v)
    density = JetPolynomial.sum(v[r] * lu[r] for r in op.rows) - JetPolynomial.sum(lv[c] * u[c] for c in op.cols)
    assert is_total_divergence(density)


def check_prolongation_commutes(q, f, d):
    ev = EvolutionaryField({("u", (0, 0)): q})
    assert prolong(ev, f.total_derivative(d)) == prolong(ev, f).total_derivative(d)


def property_tests(cases: int = CASES):
    """Hypothesis-wrapped versions of the four kernel properties."""
    polys = polynomials(two_fields, coordinates=True)
    scalar = polynomials(jet_variables(), coordinates=True)
    return {
        "total derivatives commute": settings(max_examples=cases)(given(polys, direction, direction)(
            check_total_derivatives_commute)),
        "Euler operator kills divergences": settings(max_examples=cases)(given(polys, direction)(
            check_euler_kills_divergence)),
        "adjoint is an involution": settings(max_examples=cases)(given(operators())(check_adjoint_involution)),
        "Lagrange identity": settings(max_examples=cases)(given(operators())(check_lagrange_identity)),
        "prolongation commutes with total derivatives": settings(max_examples=cases)(given(scalar, scalar, direction)(
            check_prolongation_commutes)),
    }
