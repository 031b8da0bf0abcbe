"""Variational calculus on jet polynomials.

Euler operators, divergence detection, evolutionary vector fields and their
prolongation, and matrix linear differential operators with formal adjoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import comb
from typing import Mapping

from .gaussian import ONE, GaussianRational
from .jets import (
    NO_DERIVS,
    Coordinate,
    FieldSpec,
    JetVariable,
    add_derivs,
    conjugate_derivs,
)
from .poly import JetPolynomial


class UnknownFieldError(KeyError):
    pass


class MissingCharacteristicError(KeyError):
    pass


class FieldDependentCoefficientError(ValueError):
    pass


def total_derivative(p: JetPolynomial, d: int) -> JetPolynomial:
    return p.total_derivative(d)


def euler_operator(density: JetPolynomial, field: FieldSpec, conjugate: bool = False) -> dict:
    """Variational derivative of ``density`` with respect to every component.

    ``conjugate=True`` differentiates with respect to the conjugate field,
    which is an independent jet coordinate for complex fields.
    """
    if conjugate and field.real:
        raise UnknownFieldError(f"real field {field.name} has no conjugate")
    result = {c: JetPolynomial() for c in field.components()}
    for v in sorted(density.jet_variables()):
        if v.field != field.name or v.conj != conjugate:
            continue
        if v.component not in result:
            raise UnknownFieldError(f"component {v.component} is not part of field {field.name}")
        term = density.diff(v).total_derivatives(v.derivs)
        if v.order % 2:
            term = -term
        result[v.component] = result[v.component] + term
    return result


def _euler_by_name(density: JetPolynomial, name: str, conj: bool) -> dict:
    result: dict = {}
    for v in density.jet_variables():
        if v.field != name or v.conj != conj:
            continue
        term = density.diff(v).total_derivatives(v.derivs)
        if v.order % 2:
            term = -term
        result[v.component] = result.get(v.component, JetPolynomial()) + term
    return result


def variational_derivatives(density: JetPolynomial) -> dict:
    """Euler operator for every (field, conj) present; keys ``(name, conj, component)``."""
    out = {}
    for name, conj in sorted(density.fields()):
        for comp, e in _euler_by_name(density, name, conj).items():
            out[(name, conj, comp)] = e
    return out


def is_total_divergence(density: JetPolynomial) -> bool:
    """Decide whether ``density`` is ``D_d K^d`` for polynomial ``K``.

    Fields that do not occur in the density have vanishing Euler operator, so
    it suffices to test the ones that do.
    """
    return all(e.is_zero() for e in variational_derivatives(density).values())


# -- evolutionary vector fields --------------------------------------------


@dataclass(frozen=True)
class EvolutionaryField:
    """Generator with characteristics ``delta u^c = Q^c``.

    Keys of ``characteristics`` are ``(field_name, component)``. Conjugate
    jets of complex fields transform by the conjugated characteristic;
    ``inert`` names fields (e.g. test functions) that the field ignores.
    """

    characteristics: Mapping
    real_fields: frozenset = frozenset()
    inert: frozenset = frozenset()

    def characteristic(self, v: JetVariable) -> JetPolynomial:
        q = self.characteristics.get((v.field, v.component))
        if q is None:
            raise MissingCharacteristicError(f"no characteristic for {v.field}{list(v.component)}")
        if v.conj:
            q = q.conjugate(self.real_fields)
        return q

    def is_zero(self) -> bool:
        return all(q.is_zero() for q in self.characteristics.values())

    def with_inert(self, names) -> EvolutionaryField:
        return EvolutionaryField(self.characteristics, self.real_fields, self.inert | frozenset(names))

    def prolonged_action(self, v: JetVariable) -> JetPolynomial:
        return self.characteristic(v).total_derivatives(v.derivs)

    def linear_combination(self, other: EvolutionaryField, a=1, b=1) -> EvolutionaryField:
        keys = set(self.characteristics) | set(other.characteristics)
        chars = {
            k: self.characteristics.get(k, JetPolynomial()).scale(a)
            + other.characteristics.get(k, JetPolynomial()).scale(b)
            for k in keys
        }
        return EvolutionaryField(chars, self.real_fields | other.real_fields, self.inert & other.inert)


def prolong(ev: EvolutionaryField, f: JetPolynomial) -> JetPolynomial:
    """Apply the prolonged evolutionary field to ``f``."""
    out = []
    for v in sorted(f.jet_variables()):
        if v.field in ev.inert:
            continue
        out.append(ev.prolonged_action(v) * f.diff(v))
    return JetPolynomial.sum(out)


def commutator(ev1: EvolutionaryField, ev2: EvolutionaryField) -> EvolutionaryField:
    """Characteristic of ``[pr X1, pr X2]``, namely ``X1(Q2) - X2(Q1)``."""
    keys = sorted(set(ev1.characteristics) | set(ev2.characteristics))
    chars = {}
    for k in keys:
        q1 = ev1.characteristics.get(k, JetPolynomial())
        q2 = ev2.characteristics.get(k, JetPolynomial())
        chars[k] = prolong(ev1, q2) - prolong(ev2, q1)
    return EvolutionaryField(chars, ev1.real_fields | ev2.real_fields, ev1.inert | ev2.inert)


# -- linear differential operators -------------------------------------------


def _multi_binomial(j, l) -> int:
    out = 1
    for a, b in zip(j, l):
        out *= comb(a, b)
    return out


def _sub_multisets(j):
    return product(*(range(a + 1) for a in j))


def _sub_derivs(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _clean_entry(entry: Mapping) -> dict:
    return {k: v for k, v in entry.items() if not v.is_zero()}


@dataclass(frozen=True)
class LinDiffOperator:
    """Matrix operator ``(L f)_r = sum_c sum_J a_{r,c,J} D_J f_c``.

    ``entries`` maps ``(row, col)`` to ``{derivs: coefficient}``. When
    ``conjugates_argument`` is set the operator acts on the complex conjugate
    of its argument multiplet.
    """

    rows: tuple
    cols: tuple
    entries: Mapping = field(default_factory=dict)
    conjugates_argument: bool = False
    real_fields: frozenset = frozenset()

    def __post_init__(self):
        clean = {}
        for key, entry in self.entries.items():
            e = _clean_entry(entry)
            if e:
                clean[key] = e
        object.__setattr__(self, "entries", clean)

    @classmethod
    def identity(cls, labels, conjugates_argument=False) -> LinDiffOperator:
        labels = tuple(labels)
        return cls(labels, labels, {(l, l): {NO_DERIVS: JetPolynomial.constant(1)} for l in labels},
                   conjugates_argument)

    @classmethod
    def zero(cls, rows, cols) -> LinDiffOperator:
        return cls(tuple(rows), tuple(cols), {})

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.cols))

    def order(self) -> int:
        return max((sum(j) for e in self.entries.values() for j in e), default=0)

    def is_zero(self) -> bool:
        return not self.entries

    def is_field_independent(self) -> bool:
        return all(not c.jet_variables() for e in self.entries.values() for c in e.values())

    def apply(self, argument: Mapping) -> dict:
        out = {}
        cache = {}
        for r in self.rows:
            terms = []
            for c in self.cols:
                entry = self.entries.get((r, c))
                if not entry:
                    continue
                f = argument.get(c)
                if f is None:
                    raise KeyError(f"argument multiplet lacks component {c}")
                if self.conjugates_argument:
                    f = f.conjugate(self.real_fields)
                for j, coeff in entry.items():
                    key = (c, j)
                    if key not in cache:
                        cache[key] = f.total_derivatives(j)
                    terms.append(coeff * cache[key])
            out[r] = JetPolynomial.sum(terms)
        return out

    def conjugate(self) -> LinDiffOperator:
        entries = {
            k: {conjugate_derivs(j): c.conjugate(self.real_fields) for j, c in e.items()}
            for k, e in self.entries.items()
        }
        return LinDiffOperator(self.rows, self.cols, entries, self.conjugates_argument, self.real_fields)

    def without_conjugation(self) -> LinDiffOperator:
        return LinDiffOperator(self.rows, self.cols, self.entries, False, self.real_fields)

    def __add__(self, other: LinDiffOperator) -> LinDiffOperator:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("operator shapes differ")
        if self.conjugates_argument != other.conjugates_argument and not (self.is_zero() or other.is_zero()):
            raise ValueError("cannot add operators with different conjugation behaviour")
        entries = {k: dict(v) for k, v in self.entries.items()}
        for k, e in other.entries.items():
            target = entries.setdefault(k, {})
            for j, c in e.items():
                target[j] = target.get(j, JetPolynomial()) + c
        flag = self.conjugates_argument if not self.is_zero() else other.conjugates_argument
        return LinDiffOperator(self.rows, self.cols, entries, flag, self.real_fields | other.real_fields)

    def scale(self, c) -> LinDiffOperator:
        entries = {k: {j: v.scale(c) for j, v in e.items()} for k, e in self.entries.items()}
        return LinDiffOperator(self.rows, self.cols, entries, self.conjugates_argument, self.real_fields)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def left_multiply_rows(self, weights: Mapping) -> LinDiffOperator:
        entries = {(r, c): {j: v.scale(weights[r]) for j, v in e.items()} for (r, c), e in self.entries.items()}
        return LinDiffOperator(self.rows, self.cols, entries, self.conjugates_argument, self.real_fields)

    def compose(self, inner: LinDiffOperator) -> LinDiffOperator:
        """``self o inner``; conjugation flags compose as an XOR."""
        if tuple(self.cols) != tuple(inner.rows):
            raise ValueError("operator shapes do not compose")
        if self.conjugates_argument:
            inner = inner.conjugate()
        entries: dict = {}
        for (r, m), outer in self.entries.items():
            for c in inner.cols:
                ie = inner.entries.get((m, c))
                if not ie:
                    continue
                target = entries.setdefault((r, c), {})
                for j, a in outer.items():
                    for k, b in ie.items():
                        for l in _sub_multisets(j):
                            coeff = _multi_binomial(j, l)
                            db = b.total_derivatives(_sub_derivs(j, l))
                            if db.is_zero():
                                continue
                            key = add_derivs(k, l)
                            target[key] = target.get(key, JetPolynomial()) + (a * db).scale(coeff)
        return LinDiffOperator(
            self.rows, inner.cols, entries,
            self.conjugates_argument != inner.conjugates_argument,
            self.real_fields | inner.real_fields,
        )

    def __eq__(self, other):
        if not isinstance(other, LinDiffOperator):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return (self.rows, self.cols) == (other.rows, other.cols)
        return (
            (self.rows, self.cols, self.conjugates_argument) == (other.rows, other.cols, other.conjugates_argument)
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.conjugates_argument))

    def __str__(self):
        lines = []
        for (r, c), e in sorted(self.entries.items()):
            body = " + ".join(f"({coef})*D{list(j)}" for j, coef in sorted(e.items()))
            lines.append(f"[{r} <- {c}] {body}")
        flag = " (acts on conjugate)" if self.conjugates_argument else ""
        return "\n".join(lines) + flag if lines else "0" + flag


def formal_adjoint(op: LinDiffOperator) -> LinDiffOperator:
    """Integration-by-parts adjoint for coordinate-polynomial coefficients."""
    if op.conjugates_argument:
        raise ValueError("formal_adjoint is defined for operators acting on the argument itself")
    if not op.is_field_independent():
        raise FieldDependentCoefficientError("formal_adjoint requires field-independent coefficients")
    entries: dict = {}
    for (r, c), e in op.entries.items():
        target = entries.setdefault((c, r), {})
        for j, a in e.items():
            sign = -1 if sum(j) % 2 else 1
            for l in _sub_multisets(j):
                da = a.total_derivatives(_sub_derivs(j, l))
                if da.is_zero():
                    continue
                target[l] = target.get(l, JetPolynomial()) + da.scale(sign * _multi_binomial(j, l))
    return LinDiffOperator(op.cols, op.rows, entries, False, op.real_fields)


class NonLinearError(ValueError):
    pass


def operator_from_linear(polys: Mapping, rows, field_name: str, cols, conj: bool = False,
                         real_fields=frozenset(), col_label=None) -> LinDiffOperator:
    """Read off the operator ``L`` with ``polys[r] = (L u)_r`` for the jets of ``field_name``.

    Every term must contain exactly one jet of the argument field (with the
    requested conjugation flag), appearing linearly.
    """
    entries: dict = {}
    for r in rows:
        p = polys.get(r, JetPolynomial())
        for m, c in p:
            hits = [(v, e) for v, e in m if type(v) is JetVariable and v.field == field_name]
            if len(hits) != 1 or hits[0][1] != 1 or hits[0][0].conj != conj:
                raise NonLinearError(f"term {m} is not linear in {field_name}")
            v = hits[0][0]
            rest = tuple((w, e) for w, e in m if w != v)
            coefficient = JetPolynomial.monomial(rest, c)
            col = v.component if col_label is None else col_label(v)
            target = entries.setdefault((r, col), {})
            target[v.derivs] = target.get(v.derivs, JetPolynomial()) + coefficient
    return LinDiffOperator(tuple(rows), tuple(cols), entries, conj, frozenset(real_fields))


def multiplet_add(a: Mapping, b: Mapping, scale_b=ONE) -> dict:
    keys = list(a) + [k for k in b if k not in a]
    return {k: a.get(k, JetPolynomial()) + b.get(k, JetPolynomial()).scale(scale_b) for k in keys}


def multiplet_is_zero(m: Mapping) -> bool:
    return all(p.is_zero() for p in m.values())


def pairing(left: Mapping, right: Mapping, weights: Mapping | None = None) -> JetPolynomial:
    """``sum_a w_a left_a right_a`` over shared labels."""
    terms = []
    for k, p in left.items():
        q = right.get(k)
        if q is None:
            continue
        w = 1 if weights is None else weights[k]
        terms.append((p * q).scale(w))
    return JetPolynomial.sum(terms)


__all__ = [
    "Coordinate",
    "EvolutionaryField",
    "FieldDependentCoefficientError",
    "LinDiffOperator",
    "MissingCharacteristicError",
    "NonLinearError",
    "UnknownFieldError",
    "GaussianRational",
    "commutator",
    "euler_operator",
    "formal_adjoint",
    "is_total_divergence",
    "multiplet_add",
    "multiplet_is_zero",
    "operator_from_linear",
    "pairing",
    "prolong",
    "total_derivative",
    "variational_derivatives",
]
