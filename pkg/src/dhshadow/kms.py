"""KMS spectrum data and the flow of (level, eigenvalue) pairs across lambda.

A KMS point is a pair ``(a, alpha)``: a real parabolic level and a complex
residual eigenvalue of the Higgs field, measured at lambda = 0.  The flow

    p(lambda) = a + 2 Re(lambda * conj(alpha))
    e(lambda) = alpha - a * lambda + conj(alpha) * lambda**2

carries the integer lattice Z(1, 0) onto Z(1, -lambda), so a shift of the
level by k moves the flowed eigenvalue by -k*lambda.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field

from .config import DEFAULT, Config
from .errors import InputError


def _finite(z) -> bool:
    return cmath.isfinite(complex(z))


@dataclass(frozen=True)
class KmsPoint:
    a: float
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not (math.isfinite(self.a) and _finite(self.alpha)):
            raise InputError(f"non-finite KMS point {self!r}")


@dataclass(frozen=True)
class FlowValue:
    p: float
    e: complex


@dataclass(frozen=True)
class KmsSpectrum:
    """The r KMS points at one puncture, levels represented in (-1, 0].

    Only the count and finiteness are enforced on construction; distinctness
    and the level range are checked by :func:`validate_spectrum` so that bad
    input can be reported rather than rejected blindly.
    """

    rank: int
    points: tuple[KmsPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if self.rank < 1:
            raise InputError("rank must be a positive integer")
        if len(self.points) != self.rank:
            raise InputError(
                f"spectrum has {len(self.points)} points, expected rank {self.rank}")

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class HarmonicShadow:
    """Per-puncture KMS spectra standing in for a tame harmonic bundle."""

    rank: int
    punctures: tuple[tuple[str, KmsSpectrum], ...]
    genus: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "punctures", tuple(
            (str(label), spectrum) for label, spectrum in self.punctures))
        labels = [label for label, _ in self.punctures]
        if len(set(labels)) != len(labels):
            raise InputError(f"puncture labels are not unique: {labels}")
        for label, spectrum in self.punctures:
            if spectrum.rank != self.rank:
                raise InputError(
                    f"puncture {label!r}: spectrum rank {spectrum.rank} != {self.rank}")
        if self.genus is not None and self.genus < 0:
            raise InputError("genus must be nonnegative")

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.punctures]

    def spectrum(self, label: str) -> KmsSpectrum:
        return dict(self.punctures)[label]

    def items(self):
        return iter(self.punctures)

    @classmethod
    def from_pairs(cls, pairs_by_puncture: dict, genus=None) -> "HarmonicShadow":
        """Build from ``{label: [(a, alpha), ...]}``."""
        punctures = []
        rank = None
        for label, pairs in pairs_by_puncture.items():
            pts = tuple(KmsPoint(a, alpha) for a, alpha in pairs)
            rank = len(pts) if rank is None else rank
            punctures.append((label, KmsSpectrum(len(pts), pts)))
        if rank is None:
            raise InputError("at least one puncture is required")
        return cls(rank, tuple(punctures), genus)


def flow(x: KmsPoint, lam: complex) -> FlowValue:
    lam = complex(lam)
    conj_alpha = x.alpha.conjugate()
    p = x.a + 2.0 * (lam * conj_alpha).real
    e = x.alpha - x.a * lam + conj_alpha * lam * lam
    return FlowValue(p, e)


def lattice_shift(x: KmsPoint, k: int) -> KmsPoint:
    if k == 0:
        return x
    return KmsPoint(x.a + k, x.alpha)


def reduce_mod_one(d: float) -> float:
    """Representative of ``d`` mod 1 in (-0.5, 0.5]."""
    return d - math.ceil(d - 0.5)


def window_shift(p: float, anchor: float = 0.0) -> int:
    """The integer k with p + k in (anchor - 1, anchor], as evaluated in floats."""
    k = -math.ceil(p - anchor)
    if p + k <= anchor - 1:
        k += 1  # p sat just above the open end and the sum rounded onto it
    return k


def same_kms_class(x: KmsPoint, y: KmsPoint, eps: float) -> bool:
    return (abs(reduce_mod_one(x.a - y.a)) <= eps
            and abs(x.alpha - y.alpha) <= eps)


@dataclass
class SpectrumReport:
    ok: bool
    out_of_range: list[int] = field(default_factory=list)
    duplicates: list[tuple[int, int]] = field(default_factory=list)

    def messages(self) -> list[str]:
        msgs = [f"level of point {i} outside (-1, 0]" for i in self.out_of_range]
        msgs += [f"points {i} and {j} coincide in (R/Z) x C"
                 for i, j in self.duplicates]
        return msgs


def validate_spectrum(s: KmsSpectrum, config: Config = DEFAULT) -> SpectrumReport:
    eps = config.eps_eq
    out = [i for i, x in enumerate(s.points) if not (-1.0 < x.a <= 0.0)]
    dups = [(i, j)
            for i, j in itertools.combinations(range(len(s.points)), 2)
            if same_kms_class(s.points[i], s.points[j], eps)]
    return SpectrumReport(not out and not dups, out, dups)


def validate_shadow(shadow: HarmonicShadow, config: Config = DEFAULT) -> dict:
    """Map each puncture label to its report; only failing punctures appear."""
    bad = {}
    for label, spectrum in shadow.punctures:
        rep = validate_spectrum(spectrum, config)
        if not rep.ok:
            bad[label] = rep
    return bad


def satisfies_order_condition(pairs, order, eps: float = DEFAULT.eps_eq) -> bool:
    """Condition (O): equal eigenvalues must appear with strictly increasing level."""
    seq = [pairs[i] for i in order]
    for (i, (a1, e1)), (j, (a2, e2)) in itertools.combinations(enumerate(seq), 2):
        if abs(complex(e1) - complex(e2)) <= eps and not a1 < a2:
            return False
    return True


def valid_orderings(pairs, eps: float = DEFAULT.eps_eq) -> list[tuple[int, ...]]:
    """Every ordering of ``pairs`` (as index tuples) satisfying condition (O)."""
    pairs = [(float(a), complex(e)) for a, e in pairs]
    return [perm for perm in itertools.permutations(range(len(pairs)))
            if satisfies_order_condition(pairs, perm, eps)]
