"""Anchors for autonomous polynomial ODE systems ``dy/dt = F(y)``.

Here the anchor is a bivector ``V^{ij}(y)`` on phase space. The anchor
conditions say that ``V`` is antisymmetric and invariant under the flow of
``F``; the bracket on covectors needs no derivatives of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .anchor import Verdict
from .jetcore import JetPolynomial
from .jetcore.jets import scalar_symbol


def coordinate(i: int) -> JetPolynomial:
    """Phase coordinate ``y_i`` (1-based)."""
    return JetPolynomial.variable(scalar_symbol(f"y{i}"))


def _coerce(p) -> JetPolynomial:
    return p if isinstance(p, JetPolynomial) else JetPolynomial.constant(p)


def _d(p: JetPolynomial, k: int) -> JetPolynomial:
    return p.diff(scalar_symbol(f"y{k + 1}"))


@dataclass(frozen=True)
class ODESystem:
    n: int
    F: tuple

    def __init__(self, F: Sequence):
        object.__setattr__(self, "F", tuple(_coerce(f) for f in F))
        object.__setattr__(self, "n", len(self.F))
        allowed = {scalar_symbol(f"y{i}") for i in range(1, self.n + 1)}
        for f in self.F:
            extra = f.variables() - allowed
            if extra:
                raise ValueError(f"F depends on {sorted(map(str, extra))}; only y1..y{self.n} are allowed")


@dataclass(frozen=True)
class PhaseBivector:
    """``V[i][j]`` holds ``V^{ij}``; antisymmetry is checked, never assumed."""

    n: int
    V: tuple

    def __init__(self, V: Sequence[Sequence]):
        rows = tuple(tuple(_coerce(x) for x in row) for row in V)
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("bivector must be square")
        object.__setattr__(self, "V", rows)
        object.__setattr__(self, "n", len(rows))

    @classmethod
    def from_entries(cls, n: int, entries: dict, antisymmetrize: bool = True) -> PhaseBivector:
        """Build from ``{(i, j): V^{ij}}`` with 1-based indices."""
        m = [[JetPolynomial() for _ in range(n)] for _ in range(n)]
        for (i, j), v in entries.items():
            m[i - 1][j - 1] = m[i - 1][j - 1] + _coerce(v)
            if antisymmetrize:
                m[j - 1][i - 1] = m[j - 1][i - 1] - _coerce(v)
        return cls(m)

    def __getitem__(self, ij) -> JetPolynomial:
        i, j = ij
        return self.V[i][j]


def check_f_invariance(system: ODESystem, V: PhaseBivector) -> Verdict:
    """Antisymmetry and ``F^k d_k V^{ij} + V^{ik} d_k F^j - V^{jk} d_k F^i = 0``."""
    if system.n != V.n:
        raise ValueError("dimension mismatch")
    n = system.n
    residual = {}
    for i in range(n):
        for j in range(i, n):
            sym = V[i, j] + V[j, i]
            if not sym.is_zero():
                residual[f"antisymmetry({i + 1},{j + 1})"] = sym
    for i in range(n):
        for j in range(n):
            terms = []
            for k in range(n):
                terms.append(system.F[k] * _d(V[i, j], k))
                terms.append(V[i, k] * _d(system.F[j], k))
                terms.append(-(V[j, k] * _d(system.F[i], k)))
            r = JetPolynomial.sum(terms)
            if not r.is_zero():
                residual[f"invariance({i + 1},{j + 1})"] = r
    if residual:
        first = next(iter(residual))
        return Verdict("fail", residual=residual, details={"entry": first})
    return Verdict("pass")


def jacobiator(V: PhaseBivector, i: int, j: int, k: int) -> JetPolynomial:
    """``V^{in} d_n V^{jk}`` plus cyclic permutations of ``(i, j, k)`` (0-based)."""
    terms = []
    for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
        for m in range(V.n):
            terms.append(V[a, m] * _d(V[b, c], m))
    return JetPolynomial.sum(terms)


def check_jacobi(V: PhaseBivector) -> Verdict:
    residual = {}
    for i, j, k in combinations(range(V.n), 3):
        r = jacobiator(V, i, j, k)
        if not r.is_zero():
            residual[f"({i + 1},{j + 1},{k + 1})"] = r
    if residual:
        return Verdict("fail", residual=residual, details={"triple": next(iter(residual))})
    return Verdict("pass")


def ode_bracket(V: PhaseBivector, xi1: Sequence, xi2: Sequence) -> tuple:
    """``xi3_k = d_k V^{ij} xi1_i xi2_j``."""
    n = V.n
    if len(xi1) != n or len(xi2) != n:
        raise ValueError("dimension mismatch")
    xi1 = [_coerce(x) for x in xi1]
    xi2 = [_coerce(x) for x in xi2]
    out = []
    for k in range(n):
        out.append(JetPolynomial.sum(_d(V[i, j], k) * xi1[i] * xi2[j] for i in range(n) for j in range(n)))
    return tuple(out)


def hamiltonian_vector_field(V: PhaseBivector, H) -> ODESystem:
    """``F^i = V^{ij} d_j H``."""
    H = _coerce(H)
    return ODESystem([JetPolynomial.sum(V[i, j] * _d(H, j) for j in range(V.n)) for i in range(V.n)])


def so3_bivector() -> PhaseBivector:
    """Lie-Poisson structure ``V^{ij} = eps^{ijk} y_k`` on three-space."""
    y = [coordinate(i) for i in (1, 2, 3)]
    return PhaseBivector.from_entries(3, {(1, 2): y[2], (2, 3): y[0], (3, 1): y[1]})
