"""Jet variables, field declarations and spacetime directions.

Spacetime is parametrized by the four spinor coordinates ``x^{aA}`` with
``a, A`` in ``{1, 2}``. A direction is stored as an integer ``0..3`` with
``direction = 2*(a-1) + (A-1)``; complex conjugation swaps ``a`` and ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb
from typing import NamedTuple

DIRECTIONS = (0, 1, 2, 3)
NO_DERIVS = (0, 0, 0, 0)


class DerivativeDirection(NamedTuple):
    undotted: int
    dotted: int

    @property
    def index(self) -> int:
        return 2 * (self.undotted - 1) + (self.dotted - 1)

    @classmethod
    def from_index(cls, d: int) -> DerivativeDirection:
        return cls(d // 2 + 1, d % 2 + 1)


def direction(undotted: int, dotted: int) -> int:
    if undotted not in (1, 2) or dotted not in (1, 2):
        raise ValueError(f"spinor index values must be 1 or 2, got ({undotted}, {dotted})")
    return 2 * (undotted - 1) + (dotted - 1)


_TRANSPOSE = (0, 2, 1, 3)


def conjugate_direction(d: int) -> int:
    return _TRANSPOSE[d]


def conjugate_derivs(derivs: tuple[int, ...]) -> tuple[int, ...]:
    return (derivs[0], derivs[2], derivs[1], derivs[3])


def add_derivs(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])


def derivs_of(*dirs: int) -> tuple[int, ...]:
    counts = [0, 0, 0, 0]
    for d in dirs:
        counts[d] += 1
    return tuple(counts)


def derivs_sequence(derivs: tuple[int, ...]) -> list[int]:
    """Expand a derivative multiset into a sorted list of directions."""
    return [d for d in DIRECTIONS for _ in range(derivs[d])]


def multisets(max_order: int, min_order: int = 0) -> list[tuple[int, ...]]:
    """All derivative multisets with ``min_order <= order <= max_order``."""
    out = []
    for counts in product(range(max_order + 1), repeat=4):
        if min_order <= sum(counts) <= max_order:
            out.append(counts)
    out.sort(key=lambda c: (sum(c), c))
    return out


class JetVariable(NamedTuple):
    """One jet coordinate ``D_J u^c`` (or its complex conjugate)."""

    field: str
    conj: bool
    component: tuple[int, int]
    derivs: tuple[int, int, int, int] = NO_DERIVS

    @property
    def order(self) -> int:
        return sum(self.derivs)

    def differentiate(self, d: int) -> JetVariable:
        derivs = list(self.derivs)
        derivs[d] += 1
        return self._replace(derivs=tuple(derivs))

    def __str__(self):
        name = f"{self.field}~" if self.conj else self.field
        label = f"{name}[{self.component[0]},{self.component[1]}]" if self.component else name
        if any(self.derivs):
            label += "_" + "".join(_DIR_NAMES[d] for d in derivs_sequence(self.derivs))
        return label


class Coordinate(NamedTuple):
    """The spacetime coordinate ``x^{aA}`` for a direction index."""

    direction: int

    @property
    def order(self) -> int:
        return 0

    def __str__(self):
        return f"x{_DIR_NAMES[self.direction]}"


_DIR_NAMES = ("11", "12", "21", "22")


def variable_key(v) -> tuple:
    # coordinates first, then jets by (field, conj, component, order, derivs)
    if type(v) is Coordinate:
        return (0, "", False, (v.direction,), 0, NO_DERIVS)
    return (1, v.field, v.conj, v.component, sum(v.derivs), v.derivs)


def conjugate_variable(v, real_fields: frozenset[str] = frozenset()):
    if type(v) is Coordinate:
        return Coordinate(_TRANSPOSE[v.direction])
    conj = v.conj if v.field in real_fields else not v.conj
    return JetVariable(v.field, conj, v.component, conjugate_derivs(v.derivs))


@dataclass(frozen=True)
class FieldSpec:
    """A symmetric multispinor field with ``undotted`` + ``dotted`` slots.

    Components are labelled by ``(n_u, n_d)``: the number of slots holding
    index value 2 in the undotted and dotted blocks. Slot positions (upper or
    lower) are part of the declaration and only matter for index calculus.
    """

    name: str
    undotted: int = 0
    dotted: int = 0
    real: bool = False
    undotted_upper: bool = False
    dotted_upper: bool = False

    def __post_init__(self):
        if self.undotted < 0 or self.dotted < 0:
            raise ValueError("ranks must be non-negative")
        if self.real and (self.undotted or self.dotted):
            raise ValueError("real fields must be scalars")

    def components(self) -> list[tuple[int, int]]:
        return [(u, d) for u in range(self.undotted + 1) for d in range(self.dotted + 1)]

    def weight(self, component: tuple[int, int]) -> int:
        """Number of index tuples represented by a symmetric component."""
        return comb(self.undotted, component[0]) * comb(self.dotted, component[1])

    def representative(self, component: tuple[int, int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        u, d = component
        return (
            (1,) * (self.undotted - u) + (2,) * u,
            (1,) * (self.dotted - d) + (2,) * d,
        )

    def component_of(self, undotted_values, dotted_values) -> tuple[int, int]:
        if len(undotted_values) != self.undotted or len(dotted_values) != self.dotted:
            raise ValueError(f"wrong number of indices for field {self.name}")
        return (list(undotted_values).count(2), list(dotted_values).count(2))

    def has_component(self, component) -> bool:
        return 0 <= component[0] <= self.undotted and 0 <= component[1] <= self.dotted

    def variable(self, component, derivs=NO_DERIVS, conj: bool = False) -> JetVariable:
        if not self.has_component(component):
            raise ValueError(f"component {component} out of range for field {self.name}")
        if self.real and conj:
            raise ValueError(f"real field {self.name} has no separate conjugate")
        return JetVariable(self.name, conj, tuple(component), tuple(derivs))

    def conjugate_spec(self) -> FieldSpec:
        """Index structure of the conjugate field (block kinds swapped)."""
        return FieldSpec(
            self.name,
            undotted=self.dotted,
            dotted=self.undotted,
            real=self.real,
            undotted_upper=self.dotted_upper,
            dotted_upper=self.undotted_upper,
        )


def scalar_symbol(name: str) -> JetVariable:
    """A plain commuting variable (used for ODE phase coordinates)."""
    return JetVariable(name, False, (), NO_DERIVS)
