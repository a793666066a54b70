"""Weight bookkeeping for polynomial algebras with coordinates of weight 0, -1, -2.

A monomial x^P y^Q z^R has degree |P|+|Q|+|R| and weight -(|Q| + 2|R|).
Tables are indexed by k = |Q| + 2|R| >= 0.  Everything is exact integer
arithmetic.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

from .errors import InputError, NegativeWeight


@dataclass(frozen=True)
class WeightProfile:
    n0: int
    n1: int
    n2: int

    def __post_init__(self):
        for v in (self.n0, self.n1, self.n2):
            if not isinstance(v, int) or v < 0:
                raise InputError("profile counts must be nonnegative integers")
        if self.n0 == self.n1 == self.n2 == 0:
            raise InputError("profile must have at least one coordinate")

    @property
    def size(self) -> int:
        return self.n0 + self.n1 + self.n2

    def weights(self) -> list[int]:
        """Weight (as k >= 0) of each coordinate, in order x, y, z."""
        return [0] * self.n0 + [1] * self.n1 + [2] * self.n2

    @classmethod
    def parse(cls, text: str) -> "WeightProfile":
        parts = text.split(",")
        if len(parts) != 3:
            raise InputError(f"profile must be n0,n1,n2, got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError:
            raise InputError(f"profile must be n0,n1,n2, got {text!r}") from None

    @classmethod
    def default(cls, rank: int, punctures: int, n1: int = 0) -> tuple["WeightProfile", bool]:
        """n0 = r^2 and the hint n2 = r*k; the flag marks n2 as a guess."""
        return cls(rank * rank, n1, rank * punctures), True


@dataclass(frozen=True)
class WeightTable:
    degree: int
    entries: dict  # k -> dimension

    def total(self) -> int:
        return sum(self.entries.values())

    def to_json(self) -> dict:
        return {"degree": self.degree,
                "entries": {str(k): v for k, v in sorted(self.entries.items())}}


def _multisets(n: int, d: int) -> int:
    """Monomials of degree d in n variables."""
    if d < 0:
        return 0
    if n == 0:
        return 1 if d == 0 else 0
    return comb(n + d - 1, d)


def weight_table(profile: WeightProfile, d: int) -> WeightTable:
    if d < 0:
        raise InputError("degree must be >= 0")
    entries: dict[int, int] = {}
    for q in range(d + 1):
        for r in range(d - q + 1):
            p = d - q - r
            count = (_multisets(profile.n0, p) * _multisets(profile.n1, q)
                     * _multisets(profile.n2, r))
            if count:
                k = q + 2 * r
                entries[k] = entries.get(k, 0) + count
    return WeightTable(d, dict(sorted(entries.items())))


def sym_weights(profile: WeightProfile, d: int) -> dict:
    """Weight distribution of the d-th symmetric power of the graded space,
    by enumerating multisets of basis vectors."""
    dist: dict[int, int] = {}
    for combo in itertools.combinations_with_replacement(profile.weights(), d):
        k = sum(combo)
        dist[k] = dist.get(k, 0) + 1
    return dict(sorted(dist.items()))


@dataclass
class SymReport:
    passed: bool
    table: dict
    symmetric_power: dict


def sym_check(profile: WeightProfile, d: int) -> SymReport:
    table = weight_table(profile, d).entries
    sym = sym_weights(profile, d)
    return SymReport(table == sym, table, sym)


def generating_coefficients(profile: WeightProfile, max_degree: int) -> list[list[int]]:
    """Coefficients c[d][k] of 1/((1-s)^n0 (1-sw)^n1 (1-sw^2)^n2) up to s^max_degree."""
    width = 2 * max_degree + 1
    c = [[0] * width for _ in range(max_degree + 1)]
    c[0][0] = 1
    for step in profile.weights():
        # multiply by 1/(1 - s w^step) = sum_j s^j w^(j*step)
        for d in range(1, max_degree + 1):
            for k in range(width):
                if k >= step:
                    c[d][k] += c[d - 1][k - step]
    return c


def twistor_h0(weights: dict) -> int:
    """Global sections of the graded bundle sum_k O(k)^n_k."""
    total = 0
    for k, n in weights.items():
        k, n = int(k), int(n)
        if k < 0:
            raise NegativeWeight(f"weight {k} is negative")
        if n < 0:
            raise InputError(f"multiplicity {n} at weight {k} is negative")
        total += (k + 1) * n
    return total


@dataclass
class ProductReport:
    passed: bool
    pairs: int
    failures: list


def _monomials(nvars: int, max_degree: int):
    for d in range(max_degree + 1):
        yield from itertools.combinations_with_replacement(range(nvars), d)


def filtration_product_check(profile: WeightProfile, n: int) -> ProductReport:
    """Weights add under multiplication of monomials, and truncating the
    product at degree n discards it whole rather than changing its weight."""
    if n < 0:
        raise InputError("n must be >= 0")
    w = profile.weights()

    def weight(mono):
        return sum(w[v] for v in mono)

    monos = list(_monomials(len(w), n))
    failures = []
    pairs = 0
    for m1 in monos:
        for m2 in monos:
            pairs += 1
            prod = tuple(sorted(m1 + m2))
            if len(prod) > n:
                continue  # zero in the truncated algebra
            if weight(prod) != weight(m1) + weight(m2):
                failures.append((m1, m2))
    return ProductReport(not failures, pairs, failures)


def format_table(tables: list[WeightTable]) -> str:
    ks = sorted({k for t in tables for k in t.entries})
    header = ["d"] + [f"k={k}" for k in ks] + ["total"]
    rows = [[str(t.degree)] + [str(t.entries.get(k, 0)) for k in ks] + [str(t.total())]
            for t in tables]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.rjust(wd) for c, wd in zip(r, widths)) for r in [header] + rows]
    return "\n".join(lines) + "\n"
