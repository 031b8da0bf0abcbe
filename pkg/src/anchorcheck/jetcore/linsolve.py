"""Exact sparse row echelon forms with combination tracking."""

from __future__ import annotations

import heapq
from typing import Callable, Hashable, Mapping

from .gaussian import GaussianRational


class _Desc:
    """Heap adapter turning a min-heap into a max-heap on ``key``."""

    __slots__ = ("k", "col")

    def __init__(self, k, col):
        self.k = k
        self.col = col

    def __lt__(self, other):
        return self.k > other.k


class Echelon:
    """Incrementally built echelon basis of a span of sparse vectors.

    Vectors are ``{column: coefficient}`` dicts. Each stored row has a pivot
    equal to its largest column under ``key``; reduction eliminates pivot
    columns from largest to smallest, so the remainder is the unique
    representative of the coset ``vector + span`` free of pivot columns.
    With ``track=True`` every row carries its expression in terms of the
    inserted vectors' tags.
    """

    def __init__(self, key: Callable[[Hashable], object], track: bool = True):
        self.key = key
        self.track = track
        self.pivots: dict = {}
        self._keys: dict = {}

    def _k(self, col):
        k = self._keys.get(col)
        if k is None:
            k = self._keys[col] = self.key(col)
        return k

    def __len__(self):
        return len(self.pivots)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, vector: Mapping) -> tuple[dict, dict]:
        """Return ``(remainder, combination)`` with ``vector = remainder + sum combination[t] * v_t``."""
        vec = {c: GaussianRational.coerce(v) for c, v in vector.items() if v}
        combo: dict = {}
        heap = [_Desc(self._k(c), c) for c in vec]
        heapq.heapify(heap)
        seen = set()
        while heap:
            col = heapq.heappop(heap).col
            if col in seen:
                continue
            seen.add(col)
            coeff = vec.get(col)
            if coeff is None:
                continue
            row = self.pivots.get(col)
            if row is None:
                continue
            values, rcombo = row
            factor = coeff  # pivot rows are normalized to 1
            for c, v in values.items():
                nv = vec.get(c)
                nv = -factor * v if nv is None else nv - factor * v
                if nv:
                    vec[c] = nv
                    if c not in seen:
                        heapq.heappush(heap, _Desc(self._k(c), c))
                else:
                    vec.pop(c, None)
            if self.track:
                for t, v in rcombo.items():
                    nv = combo.get(t)
                    nv = factor * v if nv is None else nv + factor * v
                    if nv:
                        combo[t] = nv
                    else:
                        combo.pop(t, None)
        return vec, combo

    def insert(self, vector: Mapping, tag: Hashable = None) -> bool:
        """Add a vector; returns False if it was already in the span."""
        rem, combo = self.reduce(vector)
        if not rem:
            return False
        if self.track:
            # rem = vector - sum combo  =>  row expressed through tags
            rcombo = {t: -v for t, v in combo.items()}
            rcombo[tag] = rcombo.get(tag, GaussianRational(0)) + 1
        else:
            rcombo = {}
        pivot = max(rem, key=self._k)
        inv = rem[pivot].inverse()
        values = {c: v * inv for c, v in rem.items()}
        if self.track:
            rcombo = {t: v * inv for t, v in rcombo.items() if v}
        self.pivots[pivot] = (values, rcombo)
        return True


def solve_in_span(vectors: Mapping, target: Mapping, key: Callable) -> dict | None:
    """Find coefficients ``c`` with ``sum_t c_t vectors[t] = target``, or None."""
    ech = Echelon(key)
    for tag in sorted(vectors, key=repr):
        ech.insert(vectors[tag], tag)
    rem, combo = ech.reduce(target)
    if rem:
        return None
    return combo
