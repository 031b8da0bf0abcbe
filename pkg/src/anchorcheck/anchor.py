"""Equation systems, Lagrange anchors and the checks built on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping

from .jetcore import (
    NO_DERIVS,
    EvolutionaryField,
    FieldSpec,
    GaussianRational,
    JetPolynomial,
    JetVariable,
    LinDiffOperator,
    commutator,
    formal_adjoint,
    multisets,
    operator_from_linear,
    prolong,
    reduce_on_shell,
    variational_derivatives,
)
from .jetcore.gaussian import I, ONE
from .jetcore.linsolve import Echelon
from .jetcore.onshell import OnShellResult
from .jetcore.poly import monomial_degree, monomial_key, monomial_mul, monomial_order
from .spinor import (
    Conj,
    Deriv,
    FieldAtom,
    Index,
    Scale,
    SpinorEnv,
    Sym,
    UPPER,
    componentize_multiplet,
)

TEST_NAMES = ("xi1", "xi2", "xi3")


class ShapeError(ValueError):
    pass


class NotLagrangianError(ShapeError):
    pass


def _half_integer(s) -> Fraction:
    s = Fraction(s)
    if s <= 0 or (2 * s).denominator != 1:
        raise ValueError(f"spin must be a positive half-integer, got {s}")
    return s


@dataclass(eq=False)
class EquationSystem:
    """Field equations ``T_a = 0`` with their pairing against test functions.

    ``test_spec`` describes the index structure of the test functions; its
    components label the equations. ``weights[a]`` is the multiplicity with
    which a symmetric component enters the full index contraction
    ``xi^a T_a``. Complex systems pair as ``xi.T + c.c.``.
    """

    name: str
    field_specs: tuple
    test_spec: FieldSpec
    equations: dict
    weights: dict
    lagrangian_pairing: dict | None = None
    spin: Fraction | None = None

    @property
    def equation_labels(self) -> tuple:
        return tuple(self.test_spec.components())

    @property
    def is_complex(self) -> bool:
        return any(not f.real for f in self.field_specs)

    @property
    def real_fields(self) -> frozenset:
        names = {f.name for f in self.field_specs if f.real}
        if not self.is_complex:
            names |= set(TEST_NAMES)
        return frozenset(names)

    @property
    def field(self) -> FieldSpec:
        return self.field_specs[0]

    def field_labels(self) -> tuple:
        return tuple((f.name, c) for f in self.field_specs for c in f.components())

    def test_spec_named(self, name: str) -> FieldSpec:
        t = self.test_spec
        return FieldSpec(name, t.undotted, t.dotted, not self.is_complex, t.undotted_upper, t.dotted_upper)

    def test_multiplet(self, name: str) -> dict:
        return {c: JetPolynomial.variable(JetVariable(name, False, c)) for c in self.equation_labels}

    def density(self, xi: Mapping) -> JetPolynomial:
        """Density of ``T[xi]``, including the conjugate part for complex systems."""
        terms = [(xi[a] * self.equations[a]).scale(self.weights[a]) for a in self.equation_labels]
        d = JetPolynomial.sum(terms)
        if self.is_complex:
            d = d + d.conjugate(self.real_fields)
        return d

    def linear_operator(self) -> LinDiffOperator | None:
        """``T`` as a matrix operator on the field multiplet, if it is linear."""
        if len(self.field_specs) != 1:
            return None
        f = self.field
        try:
            return operator_from_linear(
                self.equations, self.equation_labels, f.name, self.field_labels(),
                real_fields=self.real_fields, col_label=lambda v: (v.field, v.component),
            )
        except ValueError:
            return None

    def is_linear_field_independent(self) -> bool:
        op = self.linear_operator()
        return op is not None and op.is_field_independent()

    def __repr__(self):
        return f"EquationSystem({self.name!r}, fields={[f.name for f in self.field_specs]})"


@dataclass(eq=False)
class LagrangeAnchor:
    """``V(xi)``: field variations built linearly from a test multiplet.

    ``operator`` maps test components (columns) to ``(field, component)``
    rows. ``bracket`` optionally holds ``C(xi1, xi2)`` as polynomials in the
    reserved test fields ``xi1``/``xi2``; ``None`` means ``C = 0``.
    """

    name: str
    operator: LinDiffOperator
    bracket: dict | None = None

    @property
    def conjugates_argument(self) -> bool:
        return self.operator.conjugates_argument

    def is_field_independent(self) -> bool:
        return self.operator.is_field_independent()

    def apply(self, xi: Mapping) -> dict:
        return self.operator.apply(xi)

    def variation(self, xi: Mapping, real_fields=frozenset(), inert=frozenset()) -> EvolutionaryField:
        return EvolutionaryField(self.apply(xi), frozenset(real_fields), frozenset(inert))

    def bracket_of(self, left: Mapping, right: Mapping, system: EquationSystem) -> dict:
        labels = system.equation_labels
        if not self.bracket:
            return {a: JetPolynomial() for a in labels}
        out = {}
        for a in labels:
            c = self.bracket.get(a, JetPolynomial())
            c = substitute_test(c, "xi1", left, system.real_fields)
            c = substitute_test(c, "xi2", right, system.real_fields)
            out[a] = c
        return out


def substitute_test(p: JetPolynomial, name: str, multiplet: Mapping, real_fields=frozenset()) -> JetPolynomial:
    """Replace the jets of test field ``name`` by derivatives of ``multiplet``."""
    mapping = {}
    for v in p.jet_variables():
        if v.field != name:
            continue
        q = multiplet[v.component]
        if v.conj:
            q = q.conjugate(real_fields)
        mapping[v] = q.total_derivatives(v.derivs)
    return p.substitute(mapping) if mapping else p


@dataclass(frozen=True)
class Characteristic:
    """Zero-order multiplier ``Psi^a``, indexed like the equations."""

    values: Mapping

    def __getitem__(self, a):
        return self.values[a]

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.values.values())

    def scale(self, c) -> Characteristic:
        return Characteristic({a: v.scale(c) for a, v in self.values.items()})

    def __add__(self, other: Characteristic) -> Characteristic:
        keys = list(self.values) + [k for k in other.values if k not in self.values]
        zero = JetPolynomial()
        return Characteristic({a: self.values.get(a, zero) + other.values.get(a, zero) for a in keys})

    def __sub__(self, other: Characteristic) -> Characteristic:
        return self + other.scale(-1)

    def __eq__(self, other):
        if not isinstance(other, Characteristic):
            return NotImplemented
        keys = set(self.values) | set(other.values)
        return all(self.values.get(k, JetPolynomial()) == other.values.get(k, JetPolynomial()) for k in keys)

    def __hash__(self):
        return hash(frozenset((k, v) for k, v in self.values.items() if not v.is_zero()))

    def __str__(self):
        return "; ".join(f"{k}: {v}" for k, v in sorted(self.values.items()))


@dataclass
class Verdict:
    """Result of a check: ``status`` is ``pass``, ``fail`` or ``undecided``."""

    status: str
    residual: object = None
    witness: object = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def residual_size(self) -> int:
        r = self.residual
        if r is None:
            return 0
        if isinstance(r, JetPolynomial):
            return len(r)
        if isinstance(r, Mapping):
            return sum(len(v) if isinstance(v, JetPolynomial) else 1 for v in r.values())
        return 1

    def leading_residual(self) -> str | None:
        r = self.residual
        polys = []
        if isinstance(r, JetPolynomial):
            polys = [r]
        elif isinstance(r, Mapping):
            polys = [v for v in r.values() if isinstance(v, JetPolynomial)]
        best = None
        for p in polys:
            lt = p.leading_term()
            if lt and (best is None or monomial_key(lt[0]) > monomial_key(best[0])):
                best = lt
        if best is None:
            return None
        return str(JetPolynomial.monomial(best[0], best[1]))


# -- constructors ---------------------------------------------------------------


def bw_field(s) -> FieldSpec:
    s = _half_integer(s)
    return FieldSpec("phi", undotted=int(2 * s))


def bw_test_spec(s, name: str = "xi") -> FieldSpec:
    s = _half_integer(s)
    return FieldSpec(name, undotted=int(2 * s) - 1, dotted=1, undotted_upper=True, dotted_upper=False)


def spinor_env(s) -> SpinorEnv:
    return SpinorEnv(fields={"phi": bw_field(s), "xi": bw_test_spec(s)})


def build_bw_system(s) -> EquationSystem:
    """``T^{A}_{b_1..b_{2s-1}} = d^{aA} phi_{a b_1 .. b_{2s-1}}`` for spin ``s``."""
    s = _half_integer(s)
    n = int(2 * s)
    env = spinor_env(s)
    rest = [f"b{k}" for k in range(1, n)]
    expr = Deriv(Index("a", UPPER), Index("ad", UPPER), FieldAtom("phi", (Index("a"),) + tuple(Index(b) for b in rest)))
    test = bw_test_spec(s)
    eqs = componentize_multiplet(expr, test, rest, ["ad"], env)
    weights = {c: test.weight(c) for c in test.components()}
    return EquationSystem(f"bw(spin={s})", (bw_field(s),), test, eqs, weights, None, s)


def bw_anchor_expression(s):
    """``i^{2s} d_{(a2 A2} ... d_{a_{2s} A_{2s}} conj(xi)_{a1)}^{A2 .. A_{2s}}``."""
    n = int(2 * _half_integer(s))
    a = [f"a{k}" for k in range(1, n + 1)]
    ad = [f"ad{k}" for k in range(2, n + 1)]
    inner = FieldAtom("xi", (Index(a[0]),) + tuple(Index(x) for x in ad), conj=True)
    for k in range(n - 1, 0, -1):
        inner = Deriv(Index(a[k]), Index(ad[k - 1]), inner)
    return Scale(I ** n, Sym(tuple(a), inner)), a


def build_bw_anchor(s) -> LagrangeAnchor:
    s = _half_integer(s)
    env = spinor_env(s)
    expr, names = bw_anchor_expression(s)
    phi = bw_field(s)
    polys = componentize_multiplet(expr, phi, names, [], env)
    rows = tuple(("phi", c) for c in phi.components())
    polys = {("phi", c): p for c, p in polys.items()}
    op = operator_from_linear(polys, rows, "xi", tuple(bw_test_spec(s).components()), conj=True)
    return LagrangeAnchor(f"bw_anchor(spin={s})", op)


def anchor_from_expression(system: EquationSystem, expr, undotted_names, dotted_names, env: SpinorEnv,
                           name: str = "anchor") -> LagrangeAnchor:
    """Anchor ``V(xi)`` given as a spinor expression in ``xi`` or ``conj(xi)``."""
    polys = componentize_multiplet(expr, system.field, undotted_names, dotted_names, env)
    return anchor_from_polynomials(system, {(system.field.name, c): p for c, p in polys.items()}, name)


def anchor_from_polynomials(system: EquationSystem, polys: Mapping, name: str = "anchor",
                            test_name: str = "xi", bracket=None) -> LagrangeAnchor:
    rows = system.field_labels()
    cols = system.equation_labels
    flags = {v.conj for p in polys.values() for v in p.jet_variables() if v.field == test_name}
    if len(flags) > 1:
        raise ShapeError("anchor mixes xi and conj(xi)")
    conj = flags.pop() if flags else False
    op = operator_from_linear(polys, rows, test_name, cols, conj=conj, real_fields=system.real_fields)
    return LagrangeAnchor(name, op, bracket)


def zero_anchor(system: EquationSystem) -> LagrangeAnchor:
    return LagrangeAnchor("zero", LinDiffOperator.zero(system.field_labels(), system.equation_labels))


def lagrangian_system(field_spec: FieldSpec, density: JetPolynomial, name: str = "lagrangian") -> EquationSystem:
    """Euler-Lagrange equations of ``density``.

    For complex fields the equations are ``dS/d conj(phi)``: they carry the
    index structure of ``conj(phi)`` and so do the test functions.
    """
    conj = not field_spec.real
    eqs = variational_derivatives(density)
    spec = field_spec.conjugate_spec() if conj else field_spec
    test = FieldSpec("xi", spec.undotted, spec.dotted, field_spec.real, spec.undotted_upper, spec.dotted_upper)
    equations, pairing = {}, {}
    for c in field_spec.components():
        label = (c[1], c[0]) if conj else c
        equations[label] = eqs.get((field_spec.name, conj, c), JetPolynomial())
        pairing[label] = (field_spec.name, c, conj)
    weights = {label: 1 for label in equations}
    return EquationSystem(name, (field_spec,), test, equations, weights, pairing)


def weyl_system() -> EquationSystem:
    """Spin-1/2 equations in Euler-Lagrange form, ``E = i d^{aA} phi_a``."""
    phi = bw_field(Fraction(1, 2))
    bw = build_bw_system(Fraction(1, 2))
    # T^{A} is labelled by test component (0, d); its pairing partner is conj(phi) with the same value.
    density = JetPolynomial.sum(
        (JetPolynomial.variable(JetVariable("phi", True, (d, 0))) * bw.equations[(0, d)]).scale(Fraction(1, 2) * I)
        for d in (0, 1)
    )
    density = density + density.conjugate()
    sys = lagrangian_system(phi, density, "weyl")
    return sys


def canonical_anchor(system: EquationSystem) -> LagrangeAnchor:
    """Identity anchor of a Lagrangian system: ``delta phi^i = xi^i``."""
    if system.lagrangian_pairing is None:
        n_f, n_e = len(system.field_labels()), len(system.equation_labels)
        if n_f != n_e:
            raise NotLagrangianError(f"non-square shape: {n_f} field components vs {n_e} equations")
        raise NotLagrangianError(f"system {system.name} is not declared Lagrangian")
    conj_flags = {conj for (_, _, conj) in system.lagrangian_pairing.values()}
    if len(conj_flags) != 1:
        raise NotLagrangianError("mixed pairing")
    conj = conj_flags.pop()
    entries = {
        ((fname, comp), a): {NO_DERIVS: JetPolynomial.constant(1)}
        for a, (fname, comp, _) in system.lagrangian_pairing.items()
    }
    op = LinDiffOperator(system.field_labels(), system.equation_labels, entries, conj, system.real_fields)
    return LagrangeAnchor(f"canonical({system.name})", op)


# -- anchor condition -----------------------------------------------------------------


def anchor_density(system: EquationSystem, anchor: LagrangeAnchor) -> JetPolynomial:
    """Density of ``V[xi1] T[xi2] - V[xi2] T[xi1]`` with symbolic test fields."""
    xi1, xi2 = system.test_multiplet("xi1"), system.test_multiplet("xi2")
    inert = frozenset(TEST_NAMES)
    x1 = anchor.variation(xi1, system.real_fields, inert)
    x2 = anchor.variation(xi2, system.real_fields, inert)
    return prolong(x1, system.density(xi2)) - prolong(x2, system.density(xi1))


def _rename_test(anchor: LagrangeAnchor, target: str) -> dict:
    return {
        a: JetPolynomial.variable(JetVariable(target, False, a)) for a in anchor.operator.cols
    }


def _field_degree(m, system) -> int:
    names = {f.name for f in system.field_specs}
    return sum(e for v, e in m if type(v) is JetVariable and v.field in names)


def _test_jets(system: EquationSystem, name: str, max_order: int) -> list:
    conj_flags = (False, True) if system.is_complex else (False,)
    out = []
    for conj in conj_flags:
        for c in system.equation_labels:
            for j in multisets(max_order):
                out.append(JetVariable(name, conj, c, j))
    return out


def _field_monomials(system: EquationSystem, degree: int, max_order: int) -> list:
    from itertools import combinations_with_replacement

    from .jetcore.jets import variable_key

    pool = []
    for f in system.field_specs:
        for conj in ((False, True) if not f.real else (False,)):
            for c in f.components():
                for j in multisets(max_order):
                    pool.append(JetVariable(f.name, conj, c, j))
    out = []
    for combo in combinations_with_replacement(pool, degree):
        powers: dict = {}
        for v in combo:
            powers[v] = powers.get(v, 0) + 1
        out.append(tuple(sorted(powers.items(), key=lambda t: variable_key(t[0]))))
    return out


def _euler_vector(density: JetPolynomial, split_real: bool) -> dict:
    vec = {}
    for key, poly in variational_derivatives(density).items():
        for m, c in poly:
            if split_real:
                if c.re:
                    vec[(key, m, 0)] = GaussianRational(c.re)
                if c.im:
                    vec[(key, m, 1)] = GaussianRational(c.im)
            else:
                vec[(key, m)] = c
    return vec


def _column_key(col):
    key, m, *part = col
    return (monomial_key(m), repr(key), tuple(part))


def _jet_var_key(v):
    from .jetcore.jets import variable_key

    return variable_key(v)


def bracket_ansatz(system: EquationSystem, density: JetPolynomial, cap: int, degcap: int) -> list:
    """Candidate monomials for ``xi3 = C(xi1, xi2)``, graded by field degree.

    Splitting by field degree is exact: total derivatives and Euler operators
    respect it, so only degrees that can meet a component of the density
    through ``T`` are needed.
    """
    eq_degrees = set()
    eq_orders = []
    for t in system.equations.values():
        for m in t.terms:
            eq_degrees.add(_field_degree(m, system))
            eq_orders.append(monomial_order(m))
    d_degrees = {_field_degree(m, system) for m in density.terms}
    if len(eq_degrees) == 1:
        (t_deg,) = eq_degrees
        wanted = sorted({d - t_deg for d in d_degrees if 0 <= d - t_deg <= degcap})
    else:
        wanted = list(range(degcap + 1))
    if not wanted or density.is_zero():
        return []
    min_t_order = min(eq_orders) if eq_orders else 0
    total_cap = max(0, density.total_order() - min_t_order)
    monos = []
    jets1 = _test_jets(system, "xi1", cap)
    jets2 = _test_jets(system, "xi2", cap)
    for e in wanted:
        fmonos = _field_monomials(system, e, cap)
        for v1 in jets1:
            for v2 in jets2:
                base_order = v1.order + v2.order
                if base_order > total_cap:
                    continue
                base = tuple(sorted(((v1, 1), (v2, 1)), key=lambda t: _jet_var_key(t[0])))
                for fm in fmonos:
                    if base_order + monomial_order(fm) > total_cap:
                        continue
                    monos.append(monomial_mul(base, fm))
    return monos


def check_anchor_membership(system: EquationSystem, anchor: LagrangeAnchor, cap: int | None = None,
                            degcap: int | None = None) -> Verdict:
    """Decide ``V[xi1]T[xi2] - V[xi2]T[xi1] = T[xi3]`` modulo divergences by a linear solve."""
    density = anchor_density(system, anchor)
    if cap is None:
        cap = _default_cap(system, anchor)
    if degcap is None:
        degcap = max(0, density.degree(include_coordinates=False) - 2)
    monos = bracket_ansatz(system, density, cap, degcap)
    split = True
    target = _euler_vector(density, split)
    ech = Echelon(_column_key)
    for a in system.equation_labels:
        for m in monos:
            base = JetPolynomial.monomial(m)
            for part, unit in ((0, ONE), (1, I)):
                xi3 = {b: (base.scale(unit) if b == a else JetPolynomial()) for b in system.equation_labels}
                vec = _euler_vector(system.density(xi3), split)
                if vec:
                    ech.insert(vec, (a, m, part))
    rem, combo = ech.reduce(target)
    if not rem:
        xi3 = {a: JetPolynomial() for a in system.equation_labels}
        for (a, m, part), c in combo.items():
            xi3[a] = xi3[a] + JetPolynomial.monomial(m, c * (ONE if part == 0 else I))
        return Verdict("pass", witness=xi3, details={"ansatz_size": len(monos), "cap": cap, "degcap": degcap})
    grouped: dict = {}
    for (key, m, part), c in rem.items():
        grouped.setdefault(str(key), {})
        grouped[str(key)][m] = grouped[str(key)].get(m, GaussianRational(0)) + c * (ONE if part == 0 else I)
    residual = {k: JetPolynomial(v) for k, v in grouped.items()}
    decided = not monos
    return Verdict(
        "fail" if decided else "undecided",
        residual=residual,
        details={"ansatz_size": len(monos), "cap": cap, "degcap": degcap, "rank": ech.rank},
    )


def _default_cap(system: EquationSystem, anchor: LagrangeAnchor) -> int:
    if system.spin is not None:
        return int(2 * system.spin) + 2
    return anchor.operator.order() + 2


def composite_residual(system: EquationSystem, anchor: LagrangeAnchor) -> LinDiffOperator:
    """Residual operator of the anchor condition for linear, field-independent data.

    With ``A = W T V`` (``W`` the pairing weights, ``V`` stripped of its
    conjugation) the condition reads ``A = adjoint(conj(A))`` for anchors
    acting on ``conj(xi)`` of complex systems and ``A = adjoint(A)`` otherwise.
    """
    t_op = system.linear_operator()
    if t_op is None or not t_op.is_field_independent():
        raise ShapeError("formal-adjoint route needs linear equations with field-independent coefficients")
    if not anchor.is_field_independent():
        raise ShapeError("formal-adjoint route needs a field-independent anchor")
    v_op = anchor.operator.without_conjugation()
    a_op = t_op.compose(v_op).left_multiply_rows(system.weights)
    if system.is_complex and anchor.conjugates_argument:
        return a_op - formal_adjoint(a_op.conjugate())
    return a_op - formal_adjoint(a_op)


def check_anchor_adjoint(system: EquationSystem, anchor: LagrangeAnchor) -> Verdict:
    r = composite_residual(system, anchor)
    if r.is_zero():
        return Verdict("pass", witness={a: JetPolynomial() for a in system.equation_labels})
    residual = {f"{row}<-{col}": JetPolynomial.sum(c for c in e.values()) for (row, col), e in r.entries.items()}
    return Verdict("fail", residual=residual, details={"operator": str(r)})


def check_anchor_condition(system: EquationSystem, anchor: LagrangeAnchor, cap: int | None = None,
                           degcap: int | None = None, method: str = "auto") -> Verdict:
    """Check the Lagrange anchor condition.

    ``method`` is ``membership``, ``adjoint``, ``both`` or ``auto`` (both when
    the formal-adjoint route applies). When both run, their verdicts must
    agree; a disagreement is reported as an error verdict.
    """
    _check_shapes(system, anchor)
    adjoint_ok = system.is_linear_field_independent() and anchor.is_field_independent()
    if method == "auto":
        method = "both" if adjoint_ok else "membership"
    results = {}
    if method in ("membership", "both"):
        results["membership"] = check_anchor_membership(system, anchor, cap, degcap)
    if method in ("adjoint", "both"):
        results["adjoint"] = check_anchor_adjoint(system, anchor)
    statuses = {v.status for v in results.values()}
    primary = results.get("membership") or results["adjoint"]
    if len(statuses) > 1:
        return Verdict("error", residual=primary.residual,
                       details={"paths": {k: v.status for k, v in results.items()},
                                "message": "membership and adjoint routes disagree"})
    verdict = Verdict(primary.status, primary.residual, primary.witness, dict(primary.details))
    verdict.details["paths"] = {k: v.status for k, v in results.items()}
    return verdict


def _check_shapes(system: EquationSystem, anchor: LagrangeAnchor):
    if tuple(anchor.operator.rows) != system.field_labels():
        raise ShapeError("anchor rows do not match the field multiplet")
    if tuple(anchor.operator.cols) != system.equation_labels:
        raise ShapeError("anchor columns do not match the test multiplet")


# -- integrability ---------------------------------------------------------------------


def check_strong_integrability(anchor: LagrangeAnchor, system: EquationSystem) -> Verdict:
    """``[V[xi1], V[xi2]] = V[C(xi1, xi2)]`` plus the cyclic identity on ``C``."""
    _check_shapes(system, anchor)
    real = system.real_fields
    inert = frozenset(TEST_NAMES)
    xis = [system.test_multiplet(n) for n in TEST_NAMES]
    x1 = anchor.variation(xis[0], real, inert)
    x2 = anchor.variation(xis[1], real, inert)
    comm = commutator(x1, x2).characteristics
    c12 = anchor.bracket_of(xis[0], xis[1], system)
    rhs = anchor.apply(c12)
    residual = {str(k): comm.get(k, JetPolynomial()) - rhs.get(k, JetPolynomial()) for k in system.field_labels()}
    residual = {k: v for k, v in residual.items() if not v.is_zero()}
    cyclic = {}
    if anchor.bracket:
        order = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
        total = {a: JetPolynomial() for a in system.equation_labels}
        for i, j, k in order:
            inner = anchor.bracket_of(xis[j], xis[k], system)
            outer = anchor.bracket_of(xis[i], inner, system)
            xi_field = anchor.variation(xis[i], real, inert)
            for a in system.equation_labels:
                total[a] = total[a] + outer[a] + prolong(xi_field, inner[a])
        cyclic = {f"cyclic{a}": v for a, v in total.items() if not v.is_zero()}
    residual.update(cyclic)
    if residual:
        return Verdict("fail", residual=residual)
    return Verdict("pass", details={"bracket": "zero" if not anchor.bracket else "given"})


# -- anchor map, symmetries, brackets ----------------------------------------------------


def anchor_map(anchor: LagrangeAnchor, psi: Characteristic, system: EquationSystem | None = None) -> EvolutionaryField:
    """``Psi -> V[Psi]``: the characteristic symmetry of a characteristic."""
    cols = anchor.operator.cols
    missing = [c for c in cols if c not in psi.values]
    if missing:
        raise ShapeError(f"characteristic lacks components {missing}")
    real = system.real_fields if system is not None else anchor.operator.real_fields
    return EvolutionaryField(anchor.apply(psi.values), frozenset(real))


def check_symmetry(system: EquationSystem, ev: EvolutionaryField, cap: int | None = None,
                   degcap: int | None = None) -> Verdict:
    """Every prolonged equation must lie in the differential ideal of ``T``."""
    ev = EvolutionaryField(ev.characteristics, system.real_fields | ev.real_fields, ev.inert)
    normal_forms = {}
    statuses = []
    witnesses = {}
    caps = set()
    for a in system.equation_labels:
        p = prolong(ev, system.equations[a])
        res: OnShellResult = reduce_on_shell(p, system, cap, degcap)
        caps.add((res.cap, res.degcap))
        statuses.append(res.verdict)
        witnesses[a] = res.witness
        if not res.member:
            normal_forms[str(a)] = res.normal_form
    if all(s == "pass" for s in statuses):
        status = "pass"
    elif "fail" in statuses:
        status = "fail"
    else:
        status = "undecided"
    cap_used, deg_used = max(caps) if caps else (cap, degcap)
    return Verdict(status, residual=normal_forms or None, witness=witnesses,
                   details={"cap": cap_used, "degcap": deg_used})


def characteristic_bracket(anchor: LagrangeAnchor, psi1: Characteristic, psi2: Characteristic,
                           system: EquationSystem) -> Characteristic:
    """``{Psi1, Psi2} = V[Psi1] Psi2 - V[Psi2] Psi1 + C(Psi1, Psi2)``."""
    for psi in (psi1, psi2):
        if set(psi.values) != set(system.equation_labels):
            raise ShapeError("characteristic shape does not match the system")
    x1 = anchor_map(anchor, psi1, system)
    x2 = anchor_map(anchor, psi2, system)
    c = anchor.bracket_of(psi1.values, psi2.values, system)
    return Characteristic({
        a: prolong(x1, psi2[a]) - prolong(x2, psi1[a]) + c[a] for a in system.equation_labels
    })


def check_homomorphism(anchor: LagrangeAnchor, psi1: Characteristic, psi2: Characteristic,
                       system: EquationSystem, cap: int | None = None) -> Verdict:
    """Compare ``[V[Psi1], V[Psi2]]`` with ``V[{Psi1, Psi2}]`` on every jet up to ``cap``.

    The left side is evaluated as a commutator of derivations acting on each
    jet variable, independently of the characteristic formula for brackets.
    """
    if cap is None:
        cap = int(2 * system.spin) + 2 if system.spin is not None else 2
    x1 = anchor_map(anchor, psi1, system)
    x2 = anchor_map(anchor, psi2, system)
    xb = anchor_map(anchor, characteristic_bracket(anchor, psi1, psi2, system), system)
    residual = {}
    checked = 0
    for f in system.field_specs:
        for conj in ((False, True) if not f.real else (False,)):
            for c in f.components():
                for j in multisets(cap):
                    v = JetPolynomial.variable(JetVariable(f.name, conj, c, j))
                    lhs = prolong(x1, prolong(x2, v)) - prolong(x2, prolong(x1, v))
                    rhs = prolong(xb, v)
                    checked += 1
                    diff = lhs - rhs
                    if not diff.is_zero():
                        residual[str(v)] = diff
    status = "pass" if not residual else "fail"
    return Verdict(status, residual=residual or None, details={"jets_checked": checked, "cap": cap})
