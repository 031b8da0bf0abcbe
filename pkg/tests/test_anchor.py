from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorcheck import anchor as anc
from anchorcheck.conslaw import standard_current
from anchorcheck.jetcore import NO_DERIVS, EvolutionaryField, FieldSpec, JetPolynomial
from anchorcheck.jetcore.gaussian import I, GaussianRational
from anchorcheck.jetcore.jets import derivs_of
from anchorcheck.jetcore.poly import jet

U = ("u", (0, 0))


def scalar_system(t: JetPolynomial, name="scalar") -> anc.EquationSystem:
    return anc.EquationSystem(name, (FieldSpec("u", real=True),), FieldSpec("xi", real=True), {(0, 0): t}, {(0, 0): 1})


def scalar_anchor(system, v: JetPolynomial, name="V") -> anc.LagrangeAnchor:
    return anc.anchor_from_polynomials(system, {U: v}, name)


# -- BW anchors --------------------------------------------------------------------


@pytest.mark.parametrize("s", [Fraction(1, 2), 1, Fraction(3, 2)])
def test_bw_anchor_satisfies_condition_on_both_paths(s):
    system, anchor = anc.build_bw_system(s), anc.build_bw_anchor(s)
    v = anc.check_anchor_condition(system, anchor, method="both")
    assert v.passed
    assert v.details["paths"] == {"membership": "pass", "adjoint": "pass"}


@pytest.mark.parametrize("s", [Fraction(1, 2), 1])
def test_rotated_anchor_fails_and_real_rescaling_passes(s):
    system, good = anc.build_bw_system(s), anc.build_bw_anchor(s)
    rotated = anc.LagrangeAnchor("rot", good.operator.scale(I))
    stretched = anc.LagrangeAnchor("big", good.operator.scale(3))
    bad = anc.check_anchor_condition(system, rotated, method="both")
    assert bad.status == "fail" and bad.residual_size() > 0 and bad.leading_residual()
    assert anc.check_anchor_condition(system, stretched, method="both").passed


def test_zero_anchor_is_trivially_an_anchor():
    system = anc.build_bw_system(1)
    assert anc.check_anchor_condition(system, anc.zero_anchor(system)).passed


def test_canonical_anchor_of_weyl_system():
    w = anc.weyl_system()
    assert w.lagrangian_pairing is not None
    assert anc.check_anchor_condition(w, anc.canonical_anchor(w), method="both").passed


def test_canonical_anchor_needs_a_lagrangian_system():
    with pytest.raises(anc.NotLagrangianError):
        anc.canonical_anchor(anc.build_bw_system(1))


def test_shape_mismatch_is_rejected():
    with pytest.raises(anc.ShapeError):
        anc.check_anchor_condition(anc.build_bw_system(1), anc.build_bw_anchor(Fraction(1, 2)))


# -- scalar systems -------------------------------------------------------------------


def test_klein_gordon_type_identity_anchor():
    t = jet("u", derivs=derivs_of(0, 0)) - jet("u", derivs=derivs_of(1, 1)) + jet("u")
    system = scalar_system(t)
    v = anc.check_anchor_condition(system, scalar_anchor(system, jet("xi")), method="both")
    assert v.passed


def test_first_order_identity_anchor_is_not_an_anchor():
    system = scalar_system(jet("u", derivs=derivs_of(0)))
    v = anc.check_anchor_condition(system, scalar_anchor(system, jet("xi")), method="both")
    assert v.status == "fail"


def test_adjoint_composition_is_always_an_anchor():
    t = jet("u", derivs=derivs_of(0)) + jet("u", derivs=derivs_of(1, 2)).scale(2)
    system = scalar_system(t)
    v = jet("xi", derivs=derivs_of(0)).scale(-1) + jet("xi", derivs=derivs_of(1, 2)).scale(2)
    assert anc.check_anchor_condition(system, scalar_anchor(system, v), method="both").passed


def test_field_dependent_anchor_uses_membership_path():
    system = scalar_system(jet("u", derivs=derivs_of(0, 0)))
    anchor = scalar_anchor(system, system.equations[(0, 0)] * jet("xi"))
    v = anc.check_anchor_condition(system, anchor)
    assert v.passed and set(v.details["paths"]) == {"membership"}
    assert any(not p.is_zero() for p in v.witness.values())


# constant-coefficient scalar operators: the anchor condition is a polynomial identity
# T(p) V(p) = T(-p) V(-p) in the symbol variables p ~ D


P = sympy.symbols("p0:4")
few_derivs = st.lists(st.integers(0, 1), min_size=0, max_size=2).map(lambda ds: derivs_of(*ds))
coeffs = st.integers(-2, 2).filter(bool)


@st.composite
def constant_operator(draw, name):
    terms = draw(st.dictionaries(few_derivs, coeffs, min_size=1, max_size=3))
    return JetPolynomial.sum(jet(name, derivs=j).scale(c) for j, c in terms.items()), terms


def symbol(terms, sign=1):
    return sum(c * sympy.prod([(sign * P[d]) ** n for d, n in enumerate(j)]) for j, c in terms.items())


@settings(max_examples=60)
@given(constant_operator("u"), st.one_of(constant_operator("xi"), st.just(None)))
def test_membership_and_adjoint_paths_agree_with_symbol_oracle(t, v):
    t_poly, t_terms = t
    if v is None:
        # choose V = adjoint(T), which always passes
        v_terms = {j: c * (-1) ** sum(j) for j, c in t_terms.items()}
        v_poly = JetPolynomial.sum(jet("xi", derivs=j).scale(c) for j, c in v_terms.items())
    else:
        v_poly, v_terms = v
    system = scalar_system(t_poly)
    anchor = scalar_anchor(system, v_poly)
    oracle = sympy.expand(symbol(t_terms) * symbol(v_terms) - symbol(t_terms, -1) * symbol(v_terms, -1)) == 0
    membership = anc.check_anchor_membership(system, anchor)
    adjoint = anc.check_anchor_adjoint(system, anchor)
    assert membership.status == adjoint.status == ("pass" if oracle else "fail")


# -- strong integrability ---------------------------------------------------------------


@pytest.mark.parametrize("s", [Fraction(1, 2), 1])
def test_field_independent_anchors_are_integrable(s):
    assert anc.check_strong_integrability(anc.build_bw_anchor(s), anc.build_bw_system(s)).passed


def test_field_dependent_scalar_anchors():
    system = scalar_system(jet("u", derivs=derivs_of(1, 1)))
    linear = scalar_anchor(system, jet("u") * jet("xi"))
    assert anc.check_strong_integrability(linear, system).passed  # [u xi1, u xi2] = 0
    twisted = scalar_anchor(system, jet("u", derivs=derivs_of(1)) * jet("xi"))
    v = anc.check_strong_integrability(twisted, system)
    assert v.status == "fail" and v.residual_size() > 0


def test_bracket_closes_commutator():
    # V = u_x xi with C(xi1, xi2) = xi1 xi2_x - xi1_x xi2 reproduces [V[xi1], V[xi2]]
    system = scalar_system(jet("u", derivs=derivs_of(1, 1)))
    c = jet("xi1") * jet("xi2", derivs=derivs_of(1)) - jet("xi1", derivs=derivs_of(1)) * jet("xi2")
    anchor = anc.anchor_from_polynomials(system, {U: jet("u", derivs=derivs_of(1)) * jet("xi")},
                                         bracket={(0, 0): c})
    x1 = anchor.variation(system.test_multiplet("xi1"), system.real_fields, frozenset(anc.TEST_NAMES))
    x2 = anchor.variation(system.test_multiplet("xi2"), system.real_fields, frozenset(anc.TEST_NAMES))
    from anchorcheck.jetcore import commutator

    comm = commutator(x1, x2).characteristics[U]
    closed = anchor.apply(anchor.bracket_of(system.test_multiplet("xi1"), system.test_multiplet("xi2"), system))[U]
    assert (comm - closed).is_zero() or (comm + closed).is_zero()


# -- symmetries -------------------------------------------------------------------------


def test_translations_are_symmetries():
    system = anc.build_bw_system(1)
    ev = EvolutionaryField({("phi", c): jet("phi", c, derivs_of(2)) for c in system.field.components()})
    assert anc.check_symmetry(system, ev).passed


def test_coordinate_rescaling_is_not_a_symmetry():
    system = anc.build_bw_system(Fraction(1, 2))
    x0 = JetPolynomial.coordinate(0)
    ev = EvolutionaryField({("phi", c): x0 * jet("phi", c) for c in system.field.components()})
    v = anc.check_symmetry(system, ev)
    assert v.status == "fail" and v.leading_residual()


def test_weyl_phase_rotation():
    w = anc.weyl_system()
    ev = EvolutionaryField({("phi", c): jet("phi", c).scale(I) for c in w.field.components()})
    assert anc.check_symmetry(w, ev).passed
    psi = anc.Characteristic({a: jet("phi", (a[1], 0), conj=True).scale(-I) for a in w.equation_labels})
    assert anc.anchor_map(anc.canonical_anchor(w), psi, w).characteristics == ev.characteristics


@pytest.mark.parametrize("s", [Fraction(1, 2), 1])
def test_standard_characteristics_map_to_symmetries(s):
    system, anchor = anc.build_bw_system(s), anc.build_bw_anchor(s)
    _, pair = standard_current(s, (1, 0, 0, 1))
    assert anc.check_symmetry(system, anc.anchor_map(anchor, pair.psi, system)).passed


def test_homomorphism_at_spin_half():
    s = Fraction(1, 2)
    system, anchor = anc.build_bw_system(s), anc.build_bw_anchor(s)
    p1 = standard_current(s, (1, 0, 0, 0))[1].psi
    p2 = standard_current(s, (0, 1, 0, 0))[1].psi
    assert anc.check_homomorphism(anchor, p1, p2, system).passed


# -- small value types -------------------------------------------------------------------


def test_characteristic_algebra():
    a = anc.Characteristic({(0, 0): jet("phi"), (0, 1): JetPolynomial()})
    b = anc.Characteristic({(0, 0): jet("phi", conj=True)})
    assert (a + b) - b == a
    assert a.scale(2) == a + a
    assert hash(a) == hash(anc.Characteristic({(0, 0): jet("phi")}))
    assert not a.is_zero() and (a - a).is_zero()


def test_verdict_reporting():
    v = anc.Verdict("fail", residual={"x": jet("u") + jet("u", derivs=derivs_of(0)).scale(3)})
    assert not v.passed and v.residual_size() == 2
    assert "u" in v.leading_residual()
    assert anc.Verdict("pass").residual_size() == 0 and anc.Verdict("pass").leading_residual() is None
