"""Sparse polynomials in jet variables and coordinates over Q(i)."""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Iterator, Mapping

from .gaussian import ONE, ZERO, GaussianRational
from .jets import (
    Coordinate,
    JetVariable,
    conjugate_variable,
    derivs_sequence,
    variable_key,
)

Monomial = tuple  # tuple[(variable, exponent), ...] sorted by variable_key

UNIT: Monomial = ()


def _sorted_monomial(powers: Mapping) -> Monomial:
    return tuple(sorted(((v, e) for v, e in powers.items() if e), key=lambda t: variable_key(t[0])))


@lru_cache(maxsize=1 << 18)
def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    powers = dict(a)
    for v, e in b:
        powers[v] = powers.get(v, 0) + e
    return _sorted_monomial(powers)


@lru_cache(maxsize=1 << 16)
def monomial_key(m: Monomial) -> tuple:
    """Graded lexicographic sort key (larger key = larger monomial)."""
    expanded = []
    for v, e in m:
        expanded.extend([variable_key(v)] * e)
    expanded.sort(reverse=True)
    return (len(expanded), tuple(expanded))


def monomial_degree(m: Monomial, include_coordinates: bool = True) -> int:
    return sum(e for v, e in m if include_coordinates or type(v) is not Coordinate)


def monomial_order(m: Monomial) -> int:
    """Sum of derivative orders over the jet factors."""
    return sum(v.order * e for v, e in m)


@lru_cache(maxsize=1 << 18)
def _monomial_total_derivative(m: Monomial, d: int) -> tuple:
    out: dict = {}
    powers = dict(m)
    for v, e in m:
        rest = dict(powers)
        if e == 1:
            del rest[v]
        else:
            rest[v] = e - 1
        if type(v) is Coordinate:
            if v.direction != d:
                continue
            key = _sorted_monomial(rest)
        else:
            w = v.differentiate(d)
            rest[w] = rest.get(w, 0) + 1
            key = _sorted_monomial(rest)
        out[key] = out.get(key, 0) + e
    return tuple(out.items())


@lru_cache(maxsize=1 << 16)
def _monomial_conjugate(m: Monomial, real_fields: frozenset) -> Monomial:
    powers: dict = {}
    for v, e in m:
        w = conjugate_variable(v, real_fields)
        powers[w] = powers.get(w, 0) + e
    return _sorted_monomial(powers)


class JetPolynomial:
    """Immutable sparse polynomial ``{monomial: coefficient}``.

    Zero coefficients are never stored. Arithmetic accepts ints, Fractions
    and GaussianRationals as scalars.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = GaussianRational.coerce(c)
                if c:
                    clean[m] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> JetPolynomial:
        p = cls.__new__(cls)
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, c) -> JetPolynomial:
        c = GaussianRational.coerce(c)
        return cls._raw({UNIT: c} if c else {})

    @classmethod
    def variable(cls, v, coeff=ONE) -> JetPolynomial:
        coeff = GaussianRational.coerce(coeff)
        return cls._raw({((v, 1),): coeff} if coeff else {})

    @classmethod
    def coordinate(cls, d: int) -> JetPolynomial:
        return cls.variable(Coordinate(d))

    @classmethod
    def monomial(cls, m: Monomial, coeff=ONE) -> JetPolynomial:
        coeff = GaussianRational.coerce(coeff)
        return cls._raw({m: coeff} if coeff else {})

    @staticmethod
    def sum(polys: Iterable[JetPolynomial]) -> JetPolynomial:
        acc: dict = {}
        for p in polys:
            for m, c in p.terms.items():
                s = acc.get(m)
                acc[m] = c if s is None else s + c
        return JetPolynomial._raw({m: c for m, c in acc.items() if c})

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator:
        return iter(self.terms.items())

    def __eq__(self, other):
        if not isinstance(other, JetPolynomial):
            try:
                other = JetPolynomial.constant(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    @staticmethod
    def _lift(x) -> JetPolynomial:
        return x if isinstance(x, JetPolynomial) else JetPolynomial.constant(x)

    def __add__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        acc = dict(self.terms)
        for m, c in other.terms.items():
            s = acc.get(m)
            if s is None:
                acc[m] = c
            else:
                s = s + c
                if s:
                    acc[m] = s
                else:
                    del acc[m]
        return JetPolynomial._raw(acc)

    __radd__ = __add__

    def __neg__(self):
        return JetPolynomial._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c) -> JetPolynomial:
        c = GaussianRational.coerce(c)
        if not c:
            return JetPolynomial()
        if c == ONE:
            return self
        return JetPolynomial._raw({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, JetPolynomial):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        if not self.terms or not other.terms:
            return JetPolynomial()
        acc: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = monomial_mul(m1, m2)
                s = acc.get(m)
                acc[m] = c1 * c2 if s is None else s + c1 * c2
        return JetPolynomial._raw({m: c for m, c in acc.items() if c})

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n: int):
        result = JetPolynomial.constant(1)
        for _ in range(n):
            result = result * self
        return result

    # -- inspection ---------------------------------------------------------

    def variables(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def jet_variables(self) -> set:
        return {v for v in self.variables() if type(v) is JetVariable}

    def fields(self) -> set[tuple[str, bool]]:
        return {(v.field, v.conj) for v in self.jet_variables()}

    def degree(self, include_coordinates: bool = True) -> int:
        return max((monomial_degree(m, include_coordinates) for m in self.terms), default=0)

    def max_jet_order(self) -> int:
        return max((v.order for v in self.jet_variables()), default=0)

    def total_order(self) -> int:
        return max((monomial_order(m) for m in self.terms), default=0)

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda t: monomial_key(t[0]), reverse=True)

    def leading_term(self):
        if not self.terms:
            return None
        m = max(self.terms, key=monomial_key)
        return m, self.terms[m]

    def coefficient(self, m: Monomial) -> GaussianRational:
        return self.terms.get(m, ZERO)

    def constant_term(self) -> GaussianRational:
        return self.terms.get(UNIT, ZERO)

    # -- calculus -----------------------------------------------------------

    def total_derivative(self, d: int) -> JetPolynomial:
        acc: dict = {}
        for m, c in self.terms.items():
            for m2, k in _monomial_total_derivative(m, d):
                v = c * k
                s = acc.get(m2)
                acc[m2] = v if s is None else s + v
        return JetPolynomial._raw({m: c for m, c in acc.items() if c})

    def total_derivatives(self, derivs) -> JetPolynomial:
        p = self
        for d in derivs_sequence(derivs):
            p = p.total_derivative(d)
        return p

    def diff(self, v) -> JetPolynomial:
        """Partial derivative with respect to one variable."""
        acc: dict = {}
        for m, c in self.terms.items():
            for w, e in m:
                if w == v:
                    rest = tuple((x, f if x != v else f - 1) for x, f in m if x != v or f > 1)
                    acc[rest] = c * e
                    break
        return JetPolynomial._raw(acc)

    def conjugate(self, real_fields: frozenset[str] = frozenset()) -> JetPolynomial:
        return JetPolynomial._raw(
            {_monomial_conjugate(m, frozenset(real_fields)): c.conjugate() for m, c in self.terms.items()}
        )

    def substitute(self, mapping: Mapping) -> JetPolynomial:
        """Replace variables by polynomials."""
        out = []
        for m, c in self.terms.items():
            term = JetPolynomial.constant(c)
            for v, e in m:
                repl = mapping.get(v)
                factor = JetPolynomial.variable(v) if repl is None else repl
                term = term * (factor if e == 1 else factor ** e)
            out.append(term)
        return JetPolynomial.sum(out)

    def rename_fields(self, mapping: Mapping[str, str]) -> JetPolynomial:
        def rv(v):
            if type(v) is JetVariable and v.field in mapping:
                return v._replace(field=mapping[v.field])
            return v

        acc: dict = {}
        for m, c in self.terms.items():
            powers: dict = {}
            for v, e in m:
                w = rv(v)
                powers[w] = powers.get(w, 0) + e
            key = _sorted_monomial(powers)
            acc[key] = acc.get(key, ZERO) + c
        return JetPolynomial._raw({m: c for m, c in acc.items() if c})

    def split_by(self, predicate) -> dict:
        """Group terms by the sub-monomial of variables selected by ``predicate``.

        Returns ``{selected_monomial: remaining_polynomial}``.
        """
        groups: dict = {}
        for m, c in self.terms.items():
            sel = tuple((v, e) for v, e in m if predicate(v))
            rest = tuple((v, e) for v, e in m if not predicate(v))
            groups.setdefault(sel, {})[rest] = c
        return {k: JetPolynomial._raw(v) for k, v in groups.items()}

    def homogeneous_components(self, grading) -> dict:
        out: dict = {}
        for m, c in self.terms.items():
            out.setdefault(grading(m), {})[m] = c
        return {k: JetPolynomial._raw(v) for k, v in out.items()}

    # -- printing -----------------------------------------------------------

    def __repr__(self):
        return f"JetPolynomial({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = [str(v) if e == 1 else f"{v}^{e}" for v, e in m]
            if not factors:
                parts.append(str(c))
            elif c == ONE:
                parts.append("*".join(factors))
            elif c == -ONE:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")


def monomial_str(m: Monomial) -> str:
    if not m:
        return "1"
    return "*".join(str(v) if e == 1 else f"{v}^{e}" for v, e in m)


def var(v) -> JetPolynomial:
    return JetPolynomial.variable(v)


def const(c) -> JetPolynomial:
    return JetPolynomial.constant(c)


def jet(field: str, component=(0, 0), derivs=(0, 0, 0, 0), conj: bool = False) -> JetPolynomial:
    return JetPolynomial.variable(JetVariable(field, conj, tuple(component), tuple(derivs)))
