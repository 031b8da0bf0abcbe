"""Membership in the differential ideal generated by a system of equations.

The ideal is truncated at a derivative cap (on every jet) and a degree cap
(on polynomial multipliers) and handled as a finite-dimensional span of
polynomials, reduced with an exact echelon basis. For equations that are
bihomogeneous in (field degree, derivative order) and free of explicit
coordinates the truncation is exact once the cap reaches the total order of
the input, so a nonzero remainder certifies non-membership.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

from .gaussian import GaussianRational
from .jets import Coordinate, JetVariable, multisets, variable_key
from .linsolve import Echelon
from .poly import UNIT, JetPolynomial, monomial_degree, monomial_key, monomial_mul, monomial_order


def _jet_degree(m) -> int:
    return monomial_degree(m, include_coordinates=False)


def _bidegree(m) -> tuple[int, int]:
    return (_jet_degree(m), monomial_order(m))


@dataclass(frozen=True)
class OnShellResult:
    """Outcome of an ideal-membership reduction.

    ``witness`` maps ``(equation_label, conjugated, derivs)`` to the
    polynomial multiplier ``Q`` so that ``p = normal_form + sum Q * D_J T``.
    ``decided`` is False when a nonzero remainder might still vanish at a
    larger cap.
    """

    normal_form: JetPolynomial
    witness: dict = field(default_factory=dict)
    decided: bool = True
    cap: int = 0
    degcap: int = 0

    @property
    def member(self) -> bool:
        return self.normal_form.is_zero()

    @property
    def verdict(self) -> str:
        if self.member:
            return "pass"
        return "fail" if self.decided else "undecided"


class _Generators:
    """Prolonged equations ``D_J T_a`` (and conjugates) for one system."""

    def __init__(self, system):
        self.system = system
        eqs = []
        for label in system.equation_labels:
            eqs.append((label, False, system.equations[label]))
            if system.is_complex:
                eqs.append((label, True, system.equations[label].conjugate(system.real_fields)))
        self.base = eqs
        self._prolonged: dict = {}
        self.x_free = all(not any(type(v) is Coordinate for v in t.variables()) for _, _, t in eqs)
        bideg = []
        for _, _, t in eqs:
            classes = {_bidegree(m) for m in t.terms}
            bideg.append(classes.pop() if len(classes) == 1 else None)
        self.bidegrees = bideg
        self.bihomogeneous = all(b is not None for b in bideg)
        self.jet_orders = [t.max_jet_order() for _, _, t in eqs]

    def prolonged(self, idx: int, derivs) -> JetPolynomial:
        key = (idx, derivs)
        p = self._prolonged.get(key)
        if p is None:
            p = self.base[idx][2].total_derivatives(derivs)
            self._prolonged[key] = p
        return p

    def variables(self, cap: int) -> list:
        out = []
        for spec in self.system.field_specs:
            conj_flags = (False, True) if not spec.real else (False,)
            for conj in conj_flags:
                for comp in spec.components():
                    for j in multisets(cap):
                        out.append(JetVariable(spec.name, conj, comp, j))
        out.sort(key=variable_key)
        return out


def _monomials_with(vars_by_order: dict, degree: int, order: int) -> list:
    """Jet monomials of exact degree and total derivative order."""
    if degree == 0:
        return [UNIT] if order == 0 else []
    pool = [v for o in sorted(vars_by_order) if o <= order for v in vars_by_order[o]]
    out = []
    for combo in combinations_with_replacement(pool, degree):
        if sum(v.order for v in combo) != order:
            continue
        powers: dict = {}
        for v in combo:
            powers[v] = powers.get(v, 0) + 1
        out.append(tuple(sorted(powers.items(), key=lambda t: variable_key(t[0]))))
    return out


def _monomials_upto(variables: list, degree: int) -> list:
    out = [UNIT]
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(variables, d):
            powers: dict = {}
            for v in combo:
                powers[v] = powers.get(v, 0) + 1
            out.append(tuple(sorted(powers.items(), key=lambda t: variable_key(t[0]))))
    return out


class OnShellReducer:
    """Caches echelon bases per bidegree class for one (system, cap, degcap)."""

    def __init__(self, system, cap: int, degcap: int):
        self.system = system
        self.cap = cap
        self.degcap = degcap
        self.gens = _generators_for(system)
        self._echelons: dict = {}
        self._vars_by_order = None

    def _vars(self) -> dict:
        if self._vars_by_order is None:
            by: dict = {}
            for v in self.gens.variables(self.cap):
                by.setdefault(v.order, []).append(v)
            self._vars_by_order = by
        return self._vars_by_order

    def _echelon_for_class(self, cls) -> Echelon:
        ech = self._echelons.get(cls)
        if ech is not None:
            return ech
        ech = Echelon(monomial_key)
        deg, order = cls
        for idx, (label, conj, _) in enumerate(self.gens.base):
            d_t, o_t = self.gens.bidegrees[idx]
            k = deg - d_t
            if k < 0 or k > self.degcap:
                continue
            for j in multisets(min(order - o_t, self.cap - self.gens.jet_orders[idx])):
                g = self.gens.prolonged(idx, j)
                if g.is_zero():
                    continue
                w = order - o_t - sum(j)
                for m in _monomials_with(self._vars(), k, w):
                    vec = {monomial_mul(m, gm): c for gm, c in g.terms.items()}
                    ech.insert(vec, (m, label, conj, j))
        self._echelons[cls] = ech
        return ech

    def _general_echelon(self, x_degree: int) -> Echelon:
        key = ("general", x_degree)
        ech = self._echelons.get(key)
        if ech is not None:
            return ech
        ech = Echelon(monomial_key)
        variables = self.gens.variables(self.cap)
        multipliers = _monomials_upto(variables, self.degcap)
        coords = _monomials_upto([Coordinate(d) for d in range(4)], x_degree)
        for idx, (label, conj, _) in enumerate(self.gens.base):
            max_j = self.cap - self.gens.jet_orders[idx]
            if max_j < 0:
                continue
            for j in multisets(max_j):
                g = self.gens.prolonged(idx, j)
                if g.is_zero():
                    continue
                for xm in coords:
                    for m in multipliers:
                        mm = monomial_mul(xm, m)
                        if any(v.order > self.cap for v, _ in mm if type(v) is JetVariable):
                            continue
                        vec = {monomial_mul(mm, gm): c for gm, c in g.terms.items()}
                        ech.insert(vec, (mm, label, conj, j))
        self._echelons[key] = ech
        return ech

    def reduce(self, p: JetPolynomial) -> OnShellResult:
        gens = self.gens
        witness_terms: dict = {}
        remainder_parts = []

        def absorb(combo, x_factor=UNIT):
            for (m, label, conj, j), c in combo.items():
                k = (label, conj, j)
                witness_terms.setdefault(k, {})
                mm = monomial_mul(x_factor, m)
                witness_terms[k][mm] = witness_terms[k].get(mm, GaussianRational(0)) + c

        if gens.x_free and gens.bihomogeneous:
            pieces = p.split_by(lambda v: type(v) is Coordinate)
            for xm, piece in sorted(pieces.items(), key=lambda t: monomial_key(t[0])):
                for cls, comp in sorted(piece.homogeneous_components(_bidegree).items()):
                    rem, combo = self._echelon_for_class(cls).reduce(comp.terms)
                    remainder_parts.append(JetPolynomial(rem) * JetPolynomial.monomial(xm))
                    absorb(combo, xm)
            decided = (
                self.cap >= p.total_order()
                and self.degcap >= p.degree(include_coordinates=False) - min(b[0] for b in gens.bidegrees)
            ) if gens.bidegrees else True
        else:
            x_degree = max((sum(e for v, e in m if type(v) is Coordinate) for m in p.terms), default=0)
            rem, combo = self._general_echelon(x_degree).reduce(p.terms)
            remainder_parts.append(JetPolynomial(rem))
            absorb(combo)
            decided = False
        normal_form = JetPolynomial.sum(remainder_parts)
        witness = {k: JetPolynomial(v) for k, v in sorted(witness_terms.items(), key=repr)}
        witness = {k: v for k, v in witness.items() if not v.is_zero()}
        return OnShellResult(normal_form, witness, decided or normal_form.is_zero(), self.cap, self.degcap)


_GENERATOR_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_REDUCER_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _generators_for(system) -> _Generators:
    g = _GENERATOR_CACHE.get(system)
    if g is None:
        g = _GENERATOR_CACHE[system] = _Generators(system)
    return g


def reducer(system, cap: int, degcap: int) -> OnShellReducer:
    per_system = _REDUCER_CACHE.setdefault(system, {})
    r = per_system.get((cap, degcap))
    if r is None:
        r = per_system[(cap, degcap)] = OnShellReducer(system, cap, degcap)
    return r


def default_caps(p: JetPolynomial, system) -> tuple[int, int]:
    """Derivative cap ``order(p) + 2`` and degree cap ``degree(p)``."""
    return p.max_jet_order() + 2, p.degree(include_coordinates=False)


def reduce_on_shell(p: JetPolynomial, system, cap: int | None = None, degcap: int | None = None) -> OnShellResult:
    dcap, ddeg = default_caps(p, system)
    cap = dcap if cap is None else cap
    degcap = ddeg if degcap is None else degcap
    return reducer(system, cap, degcap).reduce(p)


def witness_combination(result: OnShellResult, system) -> JetPolynomial:
    """Rebuild ``sum Q * D_J T`` from a witness (used to audit reductions)."""
    terms = []
    for (label, conj, j), q in result.witness.items():
        t = system.equations[label]
        if conj:
            t = t.conjugate(system.real_fields)
        terms.append(q * t.total_derivatives(j))
    return JetPolynomial.sum(terms)
