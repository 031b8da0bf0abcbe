"""Conserved currents and their characteristics.

A current is carried in bispinor form ``j_{aA}``, one polynomial per
derivative direction. Its divergence is ``d^{aA} j_{aA}``; a characteristic
``Psi`` is conserved-current data when ``div j = Psi.T + c.c.`` holds as a
polynomial identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .anchor import Characteristic, EquationSystem, Verdict, bw_field
from .jetcore import JetPolynomial, JetVariable, reduce_on_shell
from .jetcore.gaussian import GaussianRational
from .jetcore.jets import DIRECTIONS, add_derivs, derivs_of, direction
from .spinor import eps, vector_to_bispinor


class NotConserved(ValueError):
    """The divergence does not lie in the module generated by the equations."""

    def __init__(self, message: str, normal_form: JetPolynomial | None = None):
        super().__init__(message)
        self.normal_form = normal_form


@dataclass(eq=False)
class ConservedCurrent:
    j: Mapping  # direction -> JetPolynomial (lower bispinor components)
    system: EquationSystem
    name: str = "j"

    def __post_init__(self):
        self.j = {d: self.j.get(d, JetPolynomial()) for d in DIRECTIONS}

    def __add__(self, other: ConservedCurrent) -> ConservedCurrent:
        return ConservedCurrent({d: self.j[d] + other.j[d] for d in DIRECTIONS}, self.system)

    def scale(self, c) -> ConservedCurrent:
        return ConservedCurrent({d: v.scale(c) for d, v in self.j.items()}, self.system)


@dataclass(frozen=True)
class CharacteristicPair:
    """``Psi`` for ``T``; the conjugate block pairs with ``conj(T)`` implicitly."""

    psi: Characteristic

    def __getitem__(self, a):
        return self.psi[a]


def _raised_derivative(a: int, ad: int) -> dict:
    """``d^{aA} = eps^{ab} eps^{AB} d_{bB}`` as ``{direction: sign}``."""
    out = {}
    for b in (1, 2):
        for bd in (1, 2):
            s = eps(a, b) * eps(ad, bd)
            if s:
                out[direction(b, bd)] = s
    return out


def divergence(j: ConservedCurrent | Mapping) -> JetPolynomial:
    comps = j.j if isinstance(j, ConservedCurrent) else j
    terms = []
    for a in (1, 2):
        for ad in (1, 2):
            jc = comps.get(direction(a, ad), JetPolynomial())
            for d, s in _raised_derivative(a, ad).items():
                terms.append(jc.total_derivative(d).scale(s))
    return JetPolynomial.sum(terms)


def _as_characteristic(psi) -> Characteristic:
    if isinstance(psi, CharacteristicPair):
        return psi.psi
    if isinstance(psi, Characteristic):
        return psi
    return Characteristic(dict(psi))


def conservation_residual(j: ConservedCurrent, psi, system: EquationSystem) -> JetPolynomial:
    p = _as_characteristic(psi)
    full = {a: p.values.get(a, JetPolynomial()) for a in system.equation_labels}
    return divergence(j) - system.density(full)


def check_conservation(j: ConservedCurrent, psi, system: EquationSystem) -> Verdict:
    """``div j - (Psi.T + c.c.)`` must vanish identically, not just on shell."""
    r = conservation_residual(j, psi, system)
    if r.is_zero():
        return Verdict("pass")
    return Verdict("fail", residual=r)


def _integrate_by_parts(witness_block: Mapping) -> JetPolynomial:
    """``sum_J (-D)_J Q_J``: moves derivatives off the equations."""
    terms = []
    for derivs, q in witness_block.items():
        sign = -1 if sum(derivs) % 2 else 1
        terms.append(q.total_derivatives(derivs).scale(sign))
    return JetPolynomial.sum(terms)


def extract_characteristic(j: ConservedCurrent, system: EquationSystem | None = None,
                           cap: int | None = None, degcap: int | None = None) -> CharacteristicPair:
    """Zero-order characteristic of a current conserved on shell.

    The divergence is written as ``sum Q_J D_J T`` by on-shell reduction;
    integrating by parts gives ``P.T + Pbar.conj(T)`` up to a divergence and
    the real part of that pairing is the characteristic. The result is brought
    to on-shell normal form, which fixes a canonical representative.
    """
    system = system or j.system
    div = divergence(j)
    res = reduce_on_shell(div, system, cap, degcap)
    if not res.member:
        status = "undecided at the given caps" if not res.decided else "not in the module of the equations"
        raise NotConserved(f"divergence is {status}", res.normal_form)
    blocks: dict = {}
    for (label, conj, derivs), q in res.witness.items():
        blocks.setdefault((label, conj), {})[derivs] = q
    real = system.real_fields
    values = {}
    for a in system.equation_labels:
        p = _integrate_by_parts(blocks.get((a, False), {}))
        w = Fraction(system.weights[a])
        if system.is_complex:
            pbar = _integrate_by_parts(blocks.get((a, True), {}))
            psi = (p + pbar.conjugate(real)).scale(Fraction(1, 2) / w)
        else:
            psi = p.scale(1 / w)
        values[a] = reduce_on_shell(psi, system).normal_form if not psi.is_zero() else psi
    return CharacteristicPair(Characteristic(values))


def currents_equivalent(j1: ConservedCurrent, j2: ConservedCurrent, system: EquationSystem | None = None) -> bool:
    """Equivalent iff the extracted characteristics coincide (on shell)."""
    system = system or j1.system
    p1 = extract_characteristic(j1, system).psi
    p2 = extract_characteristic(j2, system).psi
    for a in system.equation_labels:
        diff = p1[a] - p2[a]
        if not diff.is_zero() and not reduce_on_shell(diff, system).member:
            return False
    return True


def hermitian_bispinor(k) -> dict:
    """Normalize ``k`` to ``{(b, B): GaussianRational}``.

    Accepts a real 4-vector ``k^mu`` (mapped through the sigma dictionary) or
    a mapping of upper bispinor components, which must be Hermitian.
    """
    if isinstance(k, Mapping):
        out = {key: GaussianRational.coerce(v) for key, v in k.items()}
    else:
        if len(k) != 4:
            raise ValueError("k must have four components")
        out = {key: poly.constant_term() for key, poly in vector_to_bispinor([Fraction(c) for c in k]).items()}
    for b in (1, 2):
        for bd in (1, 2):
            out.setdefault((b, bd), GaussianRational(0))
    for b in (1, 2):
        for bd in (1, 2):
            if out[(b, bd)].conjugate() != out[(bd, b)]:
                raise ValueError("k must be Hermitian")
    return out


def _phi_component(values: Sequence[int]) -> tuple[int, int]:
    return (sum(1 for v in values if v == 2), 0)


def standard_current(s, k=(1, 0, 0, 0)) -> tuple[ConservedCurrent, CharacteristicPair]:
    """``j_{aA} = phi_{aB..} conj(phi)_{AB'..} k^{BB'} ...`` with its characteristic.

    The characteristic is ``Psi_A^{B..} = k^{BB'} .. conj(phi)_{AB'..}``; the
    pair is verified before it is returned.
    """
    from .anchor import build_bw_system

    s = Fraction(s)
    n = int(2 * s)
    kb = hermitian_bispinor(k)
    system = build_bw_system(s)
    phi = bw_field(s)

    def phi_var(values, conj=False):
        return JetPolynomial.variable(JetVariable(phi.name, conj, _phi_component(values)))

    j = {}
    for a in (1, 2):
        for ad in (1, 2):
            terms = []
            for bs in product((1, 2), repeat=n - 1):
                for bds in product((1, 2), repeat=n - 1):
                    c = GaussianRational(1)
                    for b, bd in zip(bs, bds):
                        c = c * kb[(b, bd)]
                    if c:
                        terms.append((phi_var((a,) + bs) * phi_var((ad,) + bds, True)).scale(c))
            j[direction(a, ad)] = JetPolynomial.sum(terms)
    psi = {}
    test = system.test_spec
    for label in system.equation_labels:
        vals = test.representative(label)
        ups, (ad,) = vals
        terms = []
        for bds in product((1, 2), repeat=n - 1):
            c = GaussianRational(1)
            for b, bd in zip(ups, bds):
                c = c * kb[(b, bd)]
            if c:
                terms.append(phi_var((ad,) + bds, True).scale(c))
        psi[label] = JetPolynomial.sum(terms)
    current = ConservedCurrent(j, system, name=f"standard(spin={s})")
    pair = CharacteristicPair(Characteristic(psi))
    v = check_conservation(current, pair, system)
    if not v.passed:
        raise AssertionError(f"standard current failed its own conservation check: {v.leading_residual()}")
    return current, pair


def improper_current(system: EquationSystem, bivector: Mapping) -> ConservedCurrent:
    """``j_{aA} = d^{bB} S_{[aA][bB]}`` from an antisymmetric bivector of jets.

    ``bivector`` maps ordered direction pairs ``(d1, d2)`` to polynomials and
    is antisymmetrized here; the divergence of the result vanishes identically.
    """
    anti = {}
    for (d1, d2), p in bivector.items():
        anti[(d1, d2)] = anti.get((d1, d2), JetPolynomial()) + p
        anti[(d2, d1)] = anti.get((d2, d1), JetPolynomial()) - p
    # raise both index pairs of the derivative: d^{bB} = sum sign * d_{cC}
    j = {}
    for a in (1, 2):
        for ad in (1, 2):
            terms = []
            for b in (1, 2):
                for bd in (1, 2):
                    s = anti.get((direction(a, ad), direction(b, bd)))
                    if s is None:
                        continue
                    for d, sign in _raised_derivative(b, bd).items():
                        terms.append(s.total_derivative(d).scale(sign))
            j[direction(a, ad)] = JetPolynomial.sum(terms)
    return ConservedCurrent(j, system, name="improper")
