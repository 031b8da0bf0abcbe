from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorcheck import anchor as anc
from anchorcheck import conslaw as cl
from anchorcheck.jetcore import JetPolynomial, JetVariable
from anchorcheck.jetcore.gaussian import GaussianRational
from anchorcheck.jetcore.jets import derivs_of
from anchorcheck.jetcore.poly import jet
from conftest import X, gaussians, jet_variables, polynomials, to_sympy_functions

SPINS = [Fraction(1, 2), 1, Fraction(3, 2)]
small_ints = st.integers(-3, 3)
vectors = st.tuples(small_ints, small_ints, small_ints, small_ints)


def evaluate(p: JetPolynomial, values: dict) -> GaussianRational:
    """Evaluate a zero-order polynomial at field values; conjugate jets get conjugate values."""
    sub = {}
    for v in p.jet_variables():
        x = values[v.component]
        sub[v] = JetPolynomial.constant(x.conjugate() if v.conj else x)
    return p.substitute(sub).constant_term()


def field_values(s):
    n = int(2 * s)
    return st.fixed_dictionaries({(u, 0): gaussians for u in range(n + 1)})


# -- divergence -------------------------------------------------------------------------


@settings(max_examples=40)
@given(st.lists(polynomials(jet_variables(fields=("w",)), max_terms=2, max_degree=2, coordinates=True),
                min_size=4, max_size=4))
def test_divergence_matches_raised_derivative_formula(comps):
    # d^{11'} = d_{22'}, d^{12'} = -d_{21'}, d^{21'} = -d_{12'}, d^{22'} = d_{11'}
    j = dict(enumerate(comps))
    f = {("w", False, (0, 0)): sympy.Function("W")(*X)}
    s = [to_sympy_functions(c, f) for c in comps]
    expected = sympy.diff(s[0], X[3]) - sympy.diff(s[1], X[2]) - sympy.diff(s[2], X[1]) + sympy.diff(s[3], X[0])
    assert sympy.expand(to_sympy_functions(cl.divergence(j), f) - expected) == 0


# -- standard currents --------------------------------------------------------------------


@pytest.mark.parametrize("s", SPINS)
def test_standard_current_is_conserved(s):
    j, pair = cl.standard_current(s, (2, 1, 0, -1))
    system = anc.build_bw_system(s)
    assert cl.check_conservation(j, pair, system).passed
    assert not cl.conservation_residual(j, pair.psi.scale(2), system).is_zero()


def test_spin_half_current_has_no_k_dependence():
    assert cl.standard_current(Fraction(1, 2), (1, 0, 0, 0))[0].j == cl.standard_current(Fraction(1, 2), (0, 2, 1, 0))[0].j


@pytest.mark.parametrize("s", SPINS)
def test_extraction_round_trips(s):
    j, pair = cl.standard_current(s, (1, 0, 1, 0))
    assert cl.extract_characteristic(j).psi == pair.psi


@settings(max_examples=10)
@given(st.just(1), vectors, vectors)
def test_current_is_linear_in_k(s, k1, k2):
    j1, p1 = cl.standard_current(s, k1)
    j2, p2 = cl.standard_current(s, k2)
    j12, p12 = cl.standard_current(s, tuple(a + b for a, b in zip(k1, k2)))
    assert all((j1 + j2).j[d] == j12.j[d] for d in range(4))
    assert p1.psi + p2.psi == p12.psi


@settings(max_examples=30)
@given(st.sampled_from(SPINS), st.data())
def test_energy_density_is_positive(s, data):
    # n = k = (1, 0, 0, 0): n^{aA} j_{aA} is a sum of squared moduli
    j, _ = cl.standard_current(s, (1, 0, 0, 0))
    vals = data.draw(field_values(s))
    energy = evaluate(j.j[0] + j.j[3], vals)
    assert energy.im == 0 and energy.re >= 0
    if any(vals.values()):
        assert energy.re > 0


@settings(max_examples=30)
@given(st.data())
def test_dominant_energy_at_spin_one(data):
    # future-timelike k and n give a non-negative flux
    k = (3, data.draw(st.integers(-1, 1)), data.draw(st.integers(-1, 1)), data.draw(st.integers(-1, 1)))
    n = cl.hermitian_bispinor((2, 1, 0, 1))
    j, _ = cl.standard_current(1, k)
    vals = data.draw(field_values(1))
    flux = JetPolynomial.sum(j.j[2 * (a - 1) + (ad - 1)].scale(n[(a, ad)]) for a in (1, 2) for ad in (1, 2))
    value = evaluate(flux, vals)
    assert value.im == 0 and value.re >= 0


def test_hermitian_bispinor_checks():
    assert cl.hermitian_bispinor((1, 0, 0, 0)) == {(1, 1): 1, (1, 2): 0, (2, 1): 0, (2, 2): 1}
    with pytest.raises(ValueError):
        cl.hermitian_bispinor({(1, 2): GaussianRational(0, 1), (2, 1): GaussianRational(0, 1)})
    with pytest.raises(ValueError):
        cl.hermitian_bispinor((1, 0, 0))


# -- trivial currents and equivalence ---------------------------------------------------


def test_improper_current_has_zero_divergence_and_characteristic():
    system = anc.build_bw_system(1)
    b = {(0, 3): jet("phi", (1, 0)) * jet("phi", (0, 0), conj=True), (1, 2): jet("phi", (2, 0), derivs_of(1))}
    t = cl.improper_current(system, b)
    assert cl.divergence(t).is_zero()
    assert cl.extract_characteristic(t).psi.is_zero()
    j, _ = cl.standard_current(1)
    assert cl.currents_equivalent(j, j + t)
    assert not cl.currents_equivalent(j, j.scale(2))


def test_on_shell_vanishing_current_is_trivial():
    system = anc.build_bw_system(Fraction(1, 2))
    t = system.equations[(0, 0)]
    j = cl.ConservedCurrent({0: t * t.conjugate()}, system)
    assert cl.extract_characteristic(j).psi.is_zero()


def test_non_conserved_current_is_rejected():
    system = anc.build_bw_system(Fraction(1, 2))
    j = cl.ConservedCurrent({0: jet("phi") * jet("phi", conj=True)}, system)
    with pytest.raises(cl.NotConserved) as err:
        cl.extract_characteristic(j)
    assert err.value.normal_form is not None and not err.value.normal_form.is_zero()


def test_noether_chain_reaches_a_symmetry():
    s = 1
    system, anchor = anc.build_bw_system(s), anc.build_bw_anchor(s)
    j, _ = cl.standard_current(s, (0, 0, 1, 0))
    psi = cl.extract_characteristic(j).psi
    assert anc.check_symmetry(system, anc.anchor_map(anchor, psi, system)).passed
