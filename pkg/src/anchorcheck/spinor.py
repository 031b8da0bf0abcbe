"""Two-component spinor index calculus.

Abstract expressions carry named indices of two kinds, undotted (``"u"``)
and dotted (``"d"``), each either upper or lower. They are only used to build
objects; all verification runs on the componentized jet polynomials.

Conventions (fixed): ``eps_12 = eps^12 = +1``, raising ``psi^a = eps^{ab} psi_b``
and lowering ``psi_a = psi^b eps_{ba}``, identically for dotted indices.
Derivative slots default to lower position, ``d_{aA} = d/dx^{aA}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from math import factorial
from typing import Mapping, Sequence

from .jetcore.gaussian import ONE, GaussianRational, gr
from .jetcore.jets import FieldSpec, JetVariable, direction
from .jetcore.poly import JetPolynomial

UNDOTTED = "u"
DOTTED = "d"
UPPER = "upper"
LOWER = "lower"


class SpinorIndexError(ValueError):
    """Ill-formed index structure (kind clash, repeated free index, ...)."""


class UndeclaredSymbolError(KeyError):
    pass


def eps(a: int, b: int) -> int:
    """Components of both ``eps_{ab}`` and ``eps^{ab}``."""
    if a == b:
        return 0
    return 1 if (a, b) == (1, 2) else -1


def raise_component(values: Mapping[int, GaussianRational | JetPolynomial], a: int):
    """``psi^a = eps^{ab} psi_b`` from lower components ``values[b]``."""
    return sum((values[b] * eps(a, b) for b in (1, 2) if eps(a, b)), start=0 * values[1])


def lower_component(values, a: int):
    """``psi_a = psi^b eps_{ba}`` from upper components."""
    return sum((values[b] * eps(b, a) for b in (1, 2) if eps(b, a)), start=0 * values[1])


# -- expression tree ---------------------------------------------------------

#: Index names that stand for a fixed value instead of a free or summed index.
FIXED_VALUES = {"1": 1, "2": 2}


def index_value(idx, values: Mapping[str, int]) -> int:
    fixed = FIXED_VALUES.get(idx.name)
    return fixed if fixed is not None else values[idx.name]


@dataclass(frozen=True)
class Index:
    name: str
    position: str | None = None  # None: use the slot's declared position

    def __str__(self):
        prefix = {UPPER: "^", LOWER: "_", None: ""}[self.position]
        return prefix + self.name


@dataclass(frozen=True)
class ConstTensor:
    """A constant spin-tensor with declared slot kinds and positions."""

    name: str
    kinds: tuple[str, ...]
    positions: tuple[str, ...]
    components: Mapping = field(default_factory=dict, compare=False, hash=False)

    def value(self, values: tuple[int, ...]) -> GaussianRational:
        return GaussianRational.coerce(self.components.get(tuple(values), 0))


class Expr:
    def __add__(self, other):
        return Sum((self, other))

    def __mul__(self, other):
        if isinstance(other, Expr):
            return Product((self, other))
        return Scale(gr(other) if not isinstance(other, GaussianRational) else other, self)

    def __rmul__(self, other):
        return Scale(GaussianRational.coerce(other), self)

    def __neg__(self):
        return Scale(-ONE, self)

    def __sub__(self, other):
        return Sum((self, -other))


@dataclass(frozen=True)
class FieldAtom(Expr):
    name: str
    indices: tuple[Index, ...]
    conj: bool = False


@dataclass(frozen=True)
class TensorAtom(Expr):
    name: str
    indices: tuple[Index, ...]


@dataclass(frozen=True)
class EpsAtom(Expr):
    kind: str
    indices: tuple[Index, Index]
    position: str = LOWER


@dataclass(frozen=True)
class Deriv(Expr):
    undotted: Index
    dotted: Index
    arg: Expr


@dataclass(frozen=True)
class Sym(Expr):
    names: tuple[str, ...]
    arg: Expr


@dataclass(frozen=True)
class Conj(Expr):
    arg: Expr


@dataclass(frozen=True)
class Scale(Expr):
    coeff: GaussianRational
    arg: Expr


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True)
class Constant(Expr):
    value: GaussianRational


@dataclass
class SpinorEnv:
    """Declared fields and constant tensors visible to expressions."""

    fields: dict = field(default_factory=dict)
    tensors: dict = field(default_factory=dict)

    def field_slots(self, atom: FieldAtom) -> list[tuple[str, str]]:
        spec = self.fields.get(atom.name)
        if spec is None:
            raise UndeclaredSymbolError(f"undeclared field {atom.name!r}")
        if atom.conj:
            spec = spec.conjugate_spec()
        up_u = UPPER if spec.undotted_upper else LOWER
        up_d = UPPER if spec.dotted_upper else LOWER
        return [(UNDOTTED, up_u)] * spec.undotted + [(DOTTED, up_d)] * spec.dotted

    def tensor(self, name: str) -> ConstTensor:
        t = self.tensors.get(name)
        if t is None:
            raise UndeclaredSymbolError(f"undeclared tensor {name!r}")
        return t


def _swap(kind: str) -> str:
    return DOTTED if kind == UNDOTTED else UNDOTTED


Occurrence = tuple  # (name, kind, position)


def _occurrences(e: Expr, env: SpinorEnv) -> list[Occurrence]:
    """Top-level index occurrences of a node (its free indices, resolved)."""
    return list(free_indices(e, env).items())


def _slot_occurrences(indices: Sequence[Index], slots: Sequence[tuple[str, str]], what: str) -> dict:
    if len(indices) != len(slots):
        raise SpinorIndexError(f"{what} expects {len(slots)} indices, got {len(indices)}")
    out: dict = {}
    for idx, (kind, pos) in zip(indices, slots):
        if idx.name in FIXED_VALUES:
            continue
        if idx.name in out:
            raise SpinorIndexError(f"index {idx.name!r} repeated within {what}")
        out[idx.name] = (kind, idx.position or pos)
    return out


def _contract(groups: list[dict], what: str) -> tuple[dict, dict]:
    """Merge occurrence maps of factors; returns (free, contracted)."""
    free: dict = {}
    contracted: dict = {}
    for occ in groups:
        for name, (kind, pos) in occ.items():
            if name in contracted:
                raise SpinorIndexError(f"index {name!r} appears more than twice in {what}")
            if name in free:
                k0, p0 = free.pop(name)
                if k0 != kind:
                    raise SpinorIndexError(f"index {name!r} binds a dotted slot and an undotted slot")
                if p0 == pos:
                    raise SpinorIndexError(f"contracted index {name!r} must pair an upper with a lower slot")
                contracted[name] = (kind, p0, pos)
            else:
                free[name] = (kind, pos)
    return free, contracted


def free_indices(e: Expr, env: SpinorEnv) -> dict:
    """``{name: (kind, position)}`` for every free index; validates the tree."""
    if isinstance(e, FieldAtom):
        return _slot_occurrences(e.indices, env.field_slots(e), f"field {e.name}")
    if isinstance(e, TensorAtom):
        t = env.tensor(e.name)
        return _slot_occurrences(e.indices, list(zip(t.kinds, t.positions)), f"tensor {e.name}")
    if isinstance(e, EpsAtom):
        occ = _slot_occurrences(e.indices, [(e.kind, e.position)] * 2, "epsilon")
        if len({p for _, p in occ.values()}) != 1:
            raise SpinorIndexError("epsilon with mixed index positions is not supported")
        return occ
    if isinstance(e, Constant):
        return {}
    if isinstance(e, Deriv):
        own = _slot_occurrences((e.undotted, e.dotted), [(UNDOTTED, LOWER), (DOTTED, LOWER)], "derivative")
        free, _ = _contract([own, free_indices(e.arg, env)], "derivative")
        return free
    if isinstance(e, Product):
        free, _ = _contract([free_indices(f, env) for f in e.factors], "product")
        return free
    if isinstance(e, Sum):
        sets = [free_indices(t, env) for t in e.terms]
        first = sets[0] if sets else {}
        for s in sets[1:]:
            if s != first:
                raise SpinorIndexError("terms of a sum have different free indices")
        return first
    if isinstance(e, Scale):
        return free_indices(e.arg, env)
    if isinstance(e, Sym):
        inner = free_indices(e.arg, env)
        kinds = set()
        for n in e.names:
            if n not in inner:
                raise SpinorIndexError(f"symmetrized index {n!r} is not free")
            kinds.add(inner[n])
        if len(kinds) > 1:
            raise SpinorIndexError("symmetrized indices must share kind and position")
        if len(set(e.names)) != len(e.names):
            raise SpinorIndexError("symmetrization list repeats an index")
        return inner
    if isinstance(e, Conj):
        return {n: (_swap(k), p) for n, (k, p) in free_indices(e.arg, env).items()}
    raise TypeError(f"unknown expression node {e!r}")


# -- operations ---------------------------------------------------------------


def symmetrize(e: Expr, names: Sequence[str], env: SpinorEnv | None = None) -> Expr:
    """Average over permutations of the listed index names."""
    node = Sym(tuple(names), e)
    if env is not None:
        free_indices(node, env)
    return node


def conjugate(e: Expr) -> Expr:
    """Complex conjugate; index names are kept, their kinds are swapped."""
    if isinstance(e, Conj):
        return e.arg
    return Conj(e)


def _ordinary_component(values: Mapping[str, int], occ: dict, slots: Sequence[tuple[str, str]],
                        indices: Sequence[Index]):
    """Yield ``(sign, slot_values)`` expanding position mismatches with epsilon."""
    choices = []
    for idx, (_, declared) in zip(indices, slots):
        used = idx.position or declared
        v = index_value(idx, values)
        if used == declared:
            choices.append(((1, v),))
        elif used == UPPER:
            # psi^a = eps^{ab} psi_b
            choices.append(tuple((eps(v, b), b) for b in (1, 2) if eps(v, b)))
        else:
            # psi_a = psi^b eps_{ba}
            choices.append(tuple((eps(b, v), b) for b in (1, 2) if eps(b, v)))
    for combo in product(*choices):
        sign = 1
        for s, _ in combo:
            sign *= s
        yield sign, tuple(b for _, b in combo)


def componentize(e: Expr, assignment: Mapping[str, int], env: SpinorEnv) -> JetPolynomial:
    """Expand ``e`` at the given free-index values into a jet polynomial."""
    free = free_indices(e, env)
    missing = [n for n in free if n not in assignment]
    if missing:
        raise SpinorIndexError(f"unassigned free indices: {', '.join(sorted(missing))}")
    for n in free:
        if assignment[n] not in (1, 2):
            raise SpinorIndexError(f"index value for {n!r} must be 1 or 2")
    return _comp(e, dict(assignment), env, {})


def _comp(e: Expr, asg: dict, env: SpinorEnv, memo: dict) -> JetPolynomial:
    free = free_indices(e, env)
    key = (id(e), tuple(sorted((n, asg[n]) for n in free)))
    hit = memo.get(key)
    if hit is not None:
        return hit[1]
    result = _comp_uncached(e, asg, env, memo)
    memo[key] = (e, result)
    return result


def _comp_uncached(e: Expr, asg: dict, env: SpinorEnv, memo: dict) -> JetPolynomial:
    if isinstance(e, FieldAtom):
        spec = env.fields[e.name]
        slots = env.field_slots(e)
        terms = []
        for sign, vals in _ordinary_component(asg, None, slots, e.indices):
            u_vals = vals[: (spec.dotted if e.conj else spec.undotted)]
            d_vals = vals[len(u_vals):]
            if e.conj:
                comp = (list(d_vals).count(2), list(u_vals).count(2))
            else:
                comp = (list(u_vals).count(2), list(d_vals).count(2))
            terms.append(JetPolynomial.variable(JetVariable(e.name, e.conj and not spec.real, comp), sign))
        return JetPolynomial.sum(terms)
    if isinstance(e, TensorAtom):
        t = env.tensor(e.name)
        slots = list(zip(t.kinds, t.positions))
        total = GaussianRational(0)
        for sign, vals in _ordinary_component(asg, None, slots, e.indices):
            total = total + t.value(vals) * sign
        return JetPolynomial.constant(total)
    if isinstance(e, EpsAtom):
        a, b = (index_value(i, asg) for i in e.indices)
        return JetPolynomial.constant(eps(a, b))
    if isinstance(e, Constant):
        return JetPolynomial.constant(e.value)
    if isinstance(e, Scale):
        return _comp(e.arg, asg, env, memo).scale(e.coeff)
    if isinstance(e, Sum):
        return JetPolynomial.sum(_comp(t, asg, env, memo) for t in e.terms)
    if isinstance(e, Conj):
        spec_real = frozenset(n for n, s in env.fields.items() if s.real)
        return _comp(e.arg, asg, env, memo).conjugate(spec_real)
    if isinstance(e, Sym):
        vals = [asg[n] for n in e.names]
        acc = []
        for perm in permutations(range(len(vals))):
            sub = dict(asg)
            for n, p in zip(e.names, perm):
                sub[n] = vals[p]
            acc.append(_comp(e.arg, sub, env, memo))
        return JetPolynomial.sum(acc).scale(Fraction(1, factorial(len(vals))))
    if isinstance(e, Deriv):
        own = _slot_occurrences((e.undotted, e.dotted), [(UNDOTTED, LOWER), (DOTTED, LOWER)], "derivative")
        _, contracted = _contract([own, free_indices(e.arg, env)], "derivative")
        terms = []
        for vals in product((1, 2), repeat=len(contracted)):
            sub = dict(asg)
            sub.update(zip(contracted, vals))
            inner = _comp(e.arg, sub, env, memo)
            if inner.is_zero():
                continue
            slots = [(UNDOTTED, LOWER), (DOTTED, LOWER)]
            for sign, (a, ad) in _ordinary_component(sub, None, slots, (e.undotted, e.dotted)):
                terms.append(inner.total_derivative(direction(a, ad)).scale(sign))
        return JetPolynomial.sum(terms)
    if isinstance(e, Product):
        _, contracted = _contract([free_indices(f, env) for f in e.factors], "product")
        terms = []
        for vals in product((1, 2), repeat=len(contracted)):
            sub = dict(asg)
            sub.update(zip(contracted, vals))
            acc = JetPolynomial.constant(1)
            for f in e.factors:
                acc = acc * _comp(f, sub, env, memo)
                if acc.is_zero():
                    break
            terms.append(acc)
        return JetPolynomial.sum(terms)
    raise TypeError(f"unknown expression node {e!r}")


def componentize_multiplet(e: Expr, target: FieldSpec, undotted_names: Sequence[str],
                           dotted_names: Sequence[str], env: SpinorEnv) -> dict:
    """Evaluate ``e`` on the representative index values of each component of ``target``."""
    if len(undotted_names) != target.undotted or len(dotted_names) != target.dotted:
        raise SpinorIndexError("index list does not match the target multiplet")
    free = free_indices(e, env)
    for n in undotted_names:
        if free.get(n, (None,))[0] != UNDOTTED:
            raise SpinorIndexError(f"{n!r} is not a free undotted index of the expression")
    for n in dotted_names:
        if free.get(n, (None,))[0] != DOTTED:
            raise SpinorIndexError(f"{n!r} is not a free dotted index of the expression")
    if set(free) != set(undotted_names) | set(dotted_names):
        raise SpinorIndexError("expression free indices differ from the target's")
    out = {}
    memo: dict = {}
    for comp in target.components():
        u_vals, d_vals = target.representative(comp)
        asg = dict(zip(undotted_names, u_vals))
        asg.update(zip(dotted_names, d_vals))
        out[comp] = _comp(e, asg, env, memo)
    return out


# -- vector <-> bispinor dictionary ---------------------------------------------

#: ``v^{aA} = sum_mu SIGMA[mu][(a, A)] v^mu``; sigma^0 = identity, sigma^i = Pauli.
SIGMA = (
    {(1, 1): gr(1), (1, 2): gr(0), (2, 1): gr(0), (2, 2): gr(1)},
    {(1, 1): gr(0), (1, 2): gr(1), (2, 1): gr(1), (2, 2): gr(0)},
    {(1, 1): gr(0), (1, 2): gr(0, -1), (2, 1): gr(0, 1), (2, 2): gr(0)},
    {(1, 1): gr(1), (1, 2): gr(0), (2, 1): gr(0), (2, 2): gr(-1)},
)

#: ``v^mu w_mu`` (signature +,-,-,-) equals ``v^{aA} w_{aA} / BISPINOR_NORM``.
BISPINOR_NORM = 2

MINKOWSKI = (1, -1, -1, -1)


def vector_to_bispinor(v: Sequence) -> dict:
    """Map upper vector components ``v^mu`` to ``{(a, A): v^{aA}}``."""
    out = {}
    for key in ((1, 1), (1, 2), (2, 1), (2, 2)):
        terms = [JetPolynomial.constant(0) + v[mu] * SIGMA[mu][key] for mu in range(4)]
        out[key] = JetPolynomial.sum(terms)
    return out


def bispinor_to_vector(b: Mapping) -> list:
    """Inverse of :func:`vector_to_bispinor`: ``v^mu = tr(sigma^mu v) / 2``."""
    half = Fraction(1, 2)
    out = []
    for mu in range(4):
        # Pauli matrices are Hermitian, so tr(sigma^mu v) uses sigma^mu transposed entries.
        terms = [JetPolynomial.constant(0) + b[(a, ad)] * SIGMA[mu][(ad, a)] for (a, ad) in b]
        out.append(JetPolynomial.sum(terms).scale(half))
    return out


def vector_derivative(mu: int) -> dict:
    """``d/dx^mu`` as a combination ``{direction: coefficient}`` of spinor derivatives."""
    out = {}
    for (a, ad), c in SIGMA[mu].items():
        if c:
            out[direction(a, ad)] = c
    return out


def lower_bispinor(b: Mapping) -> dict:
    """``w_{aA} = w^{bB} eps_{ba} eps_{BA}``."""
    out = {}
    for a in (1, 2):
        for ad in (1, 2):
            terms = []
            for b1 in (1, 2):
                for b2 in (1, 2):
                    s = eps(b1, a) * eps(b2, ad)
                    if s:
                        terms.append(JetPolynomial.constant(0) + b[(b1, b2)] * s)
            out[(a, ad)] = JetPolynomial.sum(terms)
    return out


def bispinor_contraction(v: Mapping, w: Mapping) -> JetPolynomial:
    """``v^{aA} w_{aA}`` for two upper bispinors."""
    lw = lower_bispinor(w)
    return JetPolynomial.sum(JetPolynomial.constant(0) + v[k] * lw[k] for k in v)


def minkowski_product(v: Sequence, w: Sequence) -> JetPolynomial:
    return JetPolynomial.sum(JetPolynomial.constant(0) + v[mu] * w[mu] * MINKOWSKI[mu] for mu in range(4))
