from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from anchorcheck.anchor import build_bw_system, bw_anchor_expression, spinor_env
from anchorcheck.jetcore import FieldSpec, JetPolynomial
from anchorcheck.jetcore.gaussian import I, GaussianRational
from anchorcheck.jetcore.jets import derivs_of
from anchorcheck.jetcore.poly import jet
from anchorcheck.spinor import (
    BISPINOR_NORM,
    LOWER,
    UPPER,
    Conj,
    ConstTensor,
    Deriv,
    EpsAtom,
    FieldAtom,
    Index,
    Product,
    SpinorEnv,
    SpinorIndexError,
    Sum,
    Sym,
    TensorAtom,
    UndeclaredSymbolError,
    UNDOTTED,
    DOTTED,
    bispinor_contraction,
    bispinor_to_vector,
    componentize,
    componentize_multiplet,
    eps,
    free_indices,
    lower_component,
    minkowski_product,
    raise_component,
    vector_derivative,
    vector_to_bispinor,
)
from conftest import gaussians

vectors = st.lists(gaussians, min_size=4, max_size=4)
real_vectors = st.lists(st.fractions(-5, 5, max_denominator=3).map(GaussianRational), min_size=4, max_size=4)


def test_epsilon_values():
    assert (eps(1, 2), eps(2, 1), eps(1, 1), eps(2, 2)) == (1, -1, 0, 0)


@given(gaussians, gaussians)
def test_raise_then_lower_is_identity(x, y):
    comps = {1: x, 2: y}
    raised = {a: raise_component(comps, a) for a in (1, 2)}
    assert {a: lower_component(raised, a) for a in (1, 2)} == comps


def test_weyl_system_components_by_hand():
    # T^A = d^{aA} phi_a with d^{11'} = d_{22'}, d^{21'} = -d_{12'}, d^{12'} = -d_{21'}, d^{22'} = d_{11'}
    eqs = build_bw_system(Fraction(1, 2)).equations
    assert eqs[(0, 0)] == jet("phi", (0, 0), derivs_of(3)) - jet("phi", (1, 0), derivs_of(1))
    assert eqs[(0, 1)] == jet("phi", (1, 0), derivs_of(0)) - jet("phi", (0, 0), derivs_of(2))


def test_spin_one_system_shape():
    system = build_bw_system(1)
    assert sorted(system.equations) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert system.weights == {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1}
    big = build_bw_system(2)
    assert big.weights[(1, 0)] == 3 and big.weights[(2, 1)] == 3
    assert all(not p.is_zero() for p in big.equations.values())


def test_symmetrizing_a_symmetric_field_changes_nothing():
    env = spinor_env(1)
    f = FieldAtom("phi", (Index("a"), Index("b")))
    for asg in ({"a": 1, "b": 2}, {"a": 2, "b": 2}):
        assert componentize(Sym(("a", "b"), f), asg, env) == componentize(f, asg, env)


def test_symmetrization_averages():
    env = SpinorEnv(fields={"p": FieldSpec("p", undotted=1), "q": FieldSpec("q", undotted=1)})
    e = Product((FieldAtom("p", (Index("a"),)), FieldAtom("q", (Index("b"),))))
    got = componentize(Sym(("a", "b"), e), {"a": 1, "b": 2}, env)
    want = (jet("p") * jet("q", (1, 0)) + jet("p", (1, 0)) * jet("q")).scale(Fraction(1, 2))
    assert got == want
    assert componentize(Sym(("a", "b"), Sym(("a", "b"), e)), {"a": 1, "b": 2}, env) == got


def test_conjugation_matches_polynomial_conjugate():
    env = spinor_env(1)
    e = Deriv(Index("b"), Index("bd"), FieldAtom("phi", (Index("a"), Index("c"))))
    e = Product((e, FieldAtom("phi", (Index("b", UPPER), Index("d")))))
    for asg in ({"a": 1, "c": 2, "d": 1, "bd": 2}, {"a": 2, "c": 2, "d": 2, "bd": 1}):
        assert componentize(Conj(e), asg, env) == componentize(e, asg, env).conjugate()


def test_contraction_sums_over_index_values():
    env = spinor_env(Fraction(1, 2))
    # phi^a phi_a = phi^1 phi_1 + phi^2 phi_2 = phi_2 phi_1 - phi_1 phi_2 = 0
    e = Product((FieldAtom("phi", (Index("a", UPPER),)), FieldAtom("phi", (Index("a"),))))
    assert componentize(e, {}, env).is_zero()
    # lowering convention: phi_a = phi^b eps_ba, so eps_ab phi^b = -phi_a
    lowered = Product((FieldAtom("phi", (Index("b", UPPER),)), EpsAtom(UNDOTTED, (Index("b"), Index("a")))))
    flipped = Product((EpsAtom(UNDOTTED, (Index("a"), Index("b"))), FieldAtom("phi", (Index("b", UPPER),))))
    for a in (1, 2):
        direct = componentize(FieldAtom("phi", (Index("a"),)), {"a": a}, env)
        assert componentize(lowered, {"a": a}, env) == direct
        assert componentize(flipped, {"a": a}, env) == -direct


def test_fixed_index_values():
    env = spinor_env(1)
    e = FieldAtom("phi", (Index("1"), Index("a")))
    assert componentize(e, {"a": 2}, env) == jet("phi", (1, 0))
    assert free_indices(e, env) == {"a": (UNDOTTED, LOWER)}


def test_tensor_atoms():
    t = ConstTensor("k", (UNDOTTED, DOTTED), (UPPER, UPPER), {(1, 2): I})
    env = SpinorEnv(fields={"phi": FieldSpec("phi", undotted=1)}, tensors={"k": t})
    e = TensorAtom("k", (Index("a"), Index("ad")))
    assert componentize(e, {"a": 1, "ad": 2}, env) == JetPolynomial.constant(I)
    assert componentize(e, {"a": 2, "ad": 2}, env).is_zero()


def test_index_discipline_errors():
    env = spinor_env(1)
    phi = lambda *names: FieldAtom("phi", tuple(Index(n) for n in names))  # noqa: E731
    with pytest.raises(SpinorIndexError):
        free_indices(Product((phi("a", "b"), phi("a", "c"))), env)  # two lower a's
    with pytest.raises(SpinorIndexError):
        free_indices(Sum((phi("a", "b"), phi("a", "c"))), env)
    with pytest.raises(SpinorIndexError):
        free_indices(phi("a"), env)
    with pytest.raises(SpinorIndexError):
        free_indices(Sym(("a", "x"), phi("a", "b")), env)
    with pytest.raises(UndeclaredSymbolError):
        free_indices(FieldAtom("chi", (Index("a"),)), env)
    with pytest.raises(SpinorIndexError):
        componentize_multiplet(phi("a", "b"), FieldSpec("t", undotted=1), ["a"], [], env)


def test_conjugate_swaps_index_kinds():
    env = spinor_env(1)
    free = free_indices(Conj(FieldAtom("phi", (Index("a"), Index("b")))), env)
    assert free == {"a": (DOTTED, LOWER), "b": (DOTTED, LOWER)}


def test_anchor_expression_free_indices():
    e, names = bw_anchor_expression(Fraction(3, 2))
    free = free_indices(e, spinor_env(Fraction(3, 2)))
    assert set(free) == set(names) and all(k == UNDOTTED for k, _ in free.values())


# -- vector dictionary ---------------------------------------------------------------


@given(vectors, vectors)
def test_bispinor_contraction_is_twice_minkowski(v, w):
    bv, bw = vector_to_bispinor(v), vector_to_bispinor(w)
    assert bispinor_contraction(bv, bw) == minkowski_product(v, w).scale(BISPINOR_NORM)


@given(vectors)
def test_vector_dictionary_round_trip(v):
    back = bispinor_to_vector(vector_to_bispinor(v))
    assert back == [JetPolynomial.constant(c) for c in v]


@given(real_vectors)
def test_real_vectors_give_hermitian_bispinors(v):
    b = vector_to_bispinor(v)
    assert b[(1, 2)].conjugate() == b[(2, 1)]
    assert b[(1, 1)].conjugate() == b[(1, 1)]


def test_vector_derivatives():
    assert vector_derivative(0) == {0: 1, 3: 1}
    assert vector_derivative(3) == {0: 1, 3: -1}
    assert vector_derivative(2) == {1: -I, 2: I}
