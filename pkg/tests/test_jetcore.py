from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.calculus.euler import euler_equations

from anchorcheck.jetcore import (
    NO_DERIVS,
    Coordinate,
    EvolutionaryField,
    FieldSpec,
    JetPolynomial,
    JetVariable,
    LinDiffOperator,
    commutator,
    euler_operator,
    formal_adjoint,
    is_total_divergence,
    multisets,
    prolong,
    reduce_on_shell,
    witness_combination,
)
from anchorcheck.jetcore.gaussian import I, ONE, GaussianRational, gr
from anchorcheck.jetcore.jets import add_derivs, conjugate_derivs, derivs_of
from anchorcheck.jetcore.linsolve import Echelon, solve_in_span
from anchorcheck.jetcore.poly import jet
from conftest import X, gaussians, jet_variables, polynomials, sympy_coeff, to_sympy, to_sympy_functions
from properties import (
    check_adjoint_involution,
    check_euler_kills_divergence,
    check_lagrange_identity,
    check_prolongation_commutes,
    check_total_derivatives_commute,
    operators,
    two_fields,
)

u = FieldSpec("u", real=True)


# -- Gaussian rationals ---------------------------------------------------------


@given(gaussians, gaussians)
def test_gaussian_field_operations_match_sympy(a, b):
    sa, sb = sympy_coeff(a), sympy_coeff(b)
    assert sympy_coeff(a + b) == sympy.expand(sa + sb)
    assert sympy_coeff(a * b) == sympy.expand(sa * sb)
    assert sympy_coeff(a - b) == sympy.expand(sa - sb)
    if b:
        assert sympy.simplify(sympy_coeff(a / b) - sa / sb) == 0


@given(gaussians)
def test_gaussian_conjugate_and_norm(a):
    assert a * a.conjugate() == a.norm()
    assert a.conjugate().conjugate() == a


def test_gaussian_literals():
    assert I * I == -1
    assert gr("1/2") == Fraction(1, 2)
    assert GaussianRational(3) == 3
    assert hash(GaussianRational(Fraction(1, 2))) == hash(Fraction(1, 2))
    assert str(gr(1, 2)) == "(1+2*i)"
    with pytest.raises(ZeroDivisionError):
        GaussianRational(0).inverse()


# -- polynomials ------------------------------------------------------------------

polys = polynomials(two_fields, coordinates=True)


@given(polys, polys, polys)
def test_ring_operations_match_sympy(p, q, r):
    assert to_sympy(p * (q + r)) == sympy.expand(to_sympy(p) * (to_sympy(q) + to_sympy(r)))
    assert to_sympy(p - q) == sympy.expand(to_sympy(p) - to_sympy(q))


@given(polys, st.integers(0, 3))
def test_total_derivative_matches_sympy_chain_rule(p, d):
    funcs = {}
    for v in p.jet_variables():
        key = (v.field, v.conj, v.component)
        funcs.setdefault(key, sympy.Function(f"{v.field}{'c' if v.conj else ''}{''.join(map(str, v.component))}")(*X))
    lhs = to_sympy_functions(p.total_derivative(d), funcs)
    rhs = sympy.diff(to_sympy_functions(p, funcs), X[d])
    assert sympy.expand(lhs - rhs) == 0


@given(polys, st.integers(0, 3), st.integers(0, 3))
def test_total_derivatives_commute(p, d1, d2):
    check_total_derivatives_commute(p, d1, d2)


@given(polys)
def test_conjugation_is_an_involution(p):
    assert p.conjugate().conjugate() == p


def test_conjugation_transposes_directions():
    v = jet("phi", (1, 0), derivs_of(1))
    assert v.conjugate() == jet("phi", (1, 0), derivs_of(2), conj=True)
    assert conjugate_derivs(derivs_of(1, 1, 3)) == derivs_of(2, 2, 3)
    assert jet("u", derivs=derivs_of(1)).conjugate(frozenset({"u"})) == jet("u", derivs=derivs_of(2))


def test_monomial_order_is_graded():
    p = jet("u") ** 2 + jet("u", derivs=derivs_of(0))
    lead, _ = p.leading_term()
    assert dict(lead) == {JetVariable("u", False, (0, 0), NO_DERIVS): 2}


def test_multisets_by_order():
    ms = multisets(2)
    assert len(ms) == 1 + 4 + 10
    assert [sum(m) for m in ms] == sorted(sum(m) for m in ms)
    assert add_derivs(derivs_of(0), derivs_of(0, 3)) == (2, 0, 0, 1)


def test_split_and_substitute():
    x = JetPolynomial.coordinate(0)
    p = x * jet("u") + jet("u", derivs=derivs_of(1))
    pieces = p.split_by(lambda v: isinstance(v, Coordinate))
    assert len(pieces) == 2
    q = p.substitute({JetVariable("u", False, (0, 0), NO_DERIVS): JetPolynomial.constant(2)})
    assert q == x.scale(2) + jet("u", derivs=derivs_of(1))


# -- Euler operator ------------------------------------------------------------------

scalar_polys = polynomials(jet_variables(), max_terms=3, coeffs=st.integers(-3, 3).map(GaussianRational),
                           coordinates=True)


@settings(max_examples=40)
@given(scalar_polys)
def test_euler_operator_matches_sympy(p):
    f = sympy.Function("U")(*X)
    lag = to_sympy_functions(p, {("u", False, (0, 0)): f})
    eqs = euler_equations(lag, [f], X) if lag.has(f) else []
    if eqs:
        expected = eqs[0].lhs
    else:
        # sympy drops equations that reduce to a constant
        expected = sympy.diff(lag.subs(f, sympy.Symbol("s")), sympy.Symbol("s")) if lag.has(f) else sympy.Integer(0)
    got = to_sympy_functions(euler_operator(p, u)[(0, 0)], {("u", False, (0, 0)): f})
    assert sympy.expand(got - expected) == 0


@given(polys, st.integers(0, 3))
def test_euler_kills_divergences(p, d):
    check_euler_kills_divergence(p, d)


def test_non_divergence_detected():
    assert not is_total_divergence(jet("u") ** 2)
    assert is_total_divergence(jet("u") * jet("u", derivs=derivs_of(2)))


# -- evolutionary fields ------------------------------------------------------------


@given(scalar_polys, scalar_polys, st.integers(0, 3))
def test_prolongation_commutes_with_total_derivatives(q, f, d):
    check_prolongation_commutes(q, f, d)


@settings(max_examples=40)
@given(scalar_polys, scalar_polys, scalar_polys)
def test_commutator_acts_as_bracket_of_derivations(q1, q2, f):
    x1 = EvolutionaryField({("u", (0, 0)): q1})
    x2 = EvolutionaryField({("u", (0, 0)): q2})
    lhs = prolong(x1, prolong(x2, f)) - prolong(x2, prolong(x1, f))
    assert lhs == prolong(commutator(x1, x2), f)


def test_inert_fields_are_not_varied():
    xi = jet("xi")
    ev = EvolutionaryField({("u", (0, 0)): xi}, inert=frozenset({"xi"}))
    assert prolong(ev, xi * jet("u")) == xi * xi


# -- linear operators ----------------------------------------------------------------


@given(operators())
def test_adjoint_involution(op):
    check_adjoint_involution(op)


@given(operators())
def test_lagrange_identity(op):
    check_lagrange_identity(op)


def test_adjoint_of_first_derivative_is_minus_itself():
    d = LinDiffOperator(("c",), ("c",), {("c", "c"): {derivs_of(0): JetPolynomial.constant(1)}})
    assert formal_adjoint(d) == d.scale(-1)
    dd = d.compose(d)
    assert formal_adjoint(dd) == dd
    rect = LinDiffOperator(("r",), ("c",), {("r", "c"): {NO_DERIVS: JetPolynomial.constant(I)}})
    assert formal_adjoint(rect).rows == ("c",) and formal_adjoint(rect).cols == ("r",)


def test_adjoint_rejects_field_dependent_coefficients():
    op = LinDiffOperator(("r",), ("c",), {("r", "c"): {NO_DERIVS: jet("u")}})
    with pytest.raises(ValueError):
        formal_adjoint(op)


@given(operators(), operators(rows=((0, 0), (1, 0)), cols=("s0",)))
def test_composition_applies_in_sequence(outer, inner):
    arg = {"s0": jet("w", derivs=derivs_of(3)) + jet("w") ** 1}
    assert outer.compose(inner).apply(arg) == outer.apply(inner.apply(arg))


# -- linear algebra -------------------------------------------------------------------


@settings(max_examples=60)
@given(st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=1, max_size=5),
       st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_span_membership_matches_sympy_rank(rows, target):
    vecs = {k: {c: v for c, v in enumerate(r) if v} for k, r in enumerate(rows)}
    got = solve_in_span(vecs, {c: v for c, v in enumerate(target) if v}, key=lambda c: c)
    m = sympy.Matrix(rows)
    in_span = m.rank() == m.col_join(sympy.Matrix([target])).rank()
    assert (got is not None) == in_span
    if got is not None:
        total = [sum((got.get(k, 0) * rows[k][c] for k in range(len(rows))), GaussianRational(0)) for c in range(4)]
        assert total == [GaussianRational(t) for t in target]


def test_echelon_rank_and_insert():
    ech = Echelon(lambda c: c)
    assert ech.insert({0: 1, 1: 1}, "a")
    assert ech.insert({1: 1}, "b")
    assert not ech.insert({0: 2}, "c")
    assert ech.rank == 2


# -- on-shell reduction ---------------------------------------------------------------


def test_on_shell_witness_reconstructs_input():
    from anchorcheck.anchor import build_bw_system

    system = build_bw_system(1)
    t = system.equations[(0, 0)]
    p = (jet("phi", (1, 0), conj=True) * t.total_derivative(2)) + t.conjugate() * jet("phi", (0, 0))
    res = reduce_on_shell(p, system)
    assert res.member and res.decided
    assert witness_combination(res, system) == p


def test_on_shell_certifies_non_membership():
    from anchorcheck.anchor import build_bw_system

    system = build_bw_system(Fraction(1, 2))
    p = jet("phi", (0, 0), derivs_of(0))
    res = reduce_on_shell(p, system)
    assert not res.member and res.decided and res.verdict == "fail"
    low = reduce_on_shell(p * jet("phi", (0, 0), derivs_of(1, 1)), system, cap=1)
    assert low.verdict == "undecided"
