"""Riemann-Hilbert shadow: real jumps and local monodromy of a residue shadow.

For a shadow at lambda != 0 the rescaled connection lambda^-1 nabla has
residues theta/lambda.  The Betti shadow of a slot is the pair

    mu   = exp(-2 pi i theta / lambda)
    jump = b + Re(theta / lambda)

where b is a strictly increasing choice of levels in (-1, 0].  At lambda = 1
this is exactly "b + Re theta".

The chart at infinity is the conjugate curve with parameter 1/lambda.  Its
loops are traversed with the orientation inherited from X, so the monodromy
there reads exp(+2 pi i theta / mu).
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .config import DEFAULT, Config
from .errors import InfeasibleBall, InputError, LambdaZero
from .hecke import ResidueShadow
from .kms import HarmonicShadow, KmsPoint, KmsSpectrum, flow

LevelChoice = dict  # puncture -> tuple of strictly increasing b in (-1, 0]


@dataclass(frozen=True)
class BettiEntry:
    mu: complex
    jump: float
    slot: int


BettiShadow = dict  # puncture -> tuple[BettiEntry, ...] sorted by jump


def default_levels(r: int) -> tuple[float, ...]:
    """Evenly spaced levels -(r - j + 1) / (2r), e.g. (-0.5, -0.25) for r = 2."""
    return tuple(-(r - j + 1) / (2 * r) for j in range(1, r + 1))


def _levels_ok(b, re_parts, gap, eps):
    for i, j in itertools.combinations(range(len(b)), 2):
        if abs((b[i] + re_parts[i]) - (b[j] + re_parts[j])) <= gap + eps:
            return (i, j)
    return None


def _choose_one(re_parts: Sequence[float], radius: float, eps: float) -> tuple[float, ...]:
    r = len(re_parts)
    gap = 2.0 * radius
    b0 = default_levels(r)
    if _levels_ok(b0, re_parts, gap, eps) is None:
        return b0
    h = 1.0 / (8 * r * r)
    n = int(round(1.0 / h))
    grid = [-1.0 + (k - 0.5) * h for k in range(1, n + 1)]
    blocking = [None]

    def search(prefix):
        j = len(prefix)
        if j == r:
            return prefix
        lo = prefix[-1] if prefix else -1.0
        for cand in grid:
            if cand <= lo:
                continue
            if n - grid.index(cand) < r - j:
                break
            bad = None
            for i in range(j):
                if abs((cand + re_parts[j]) - (prefix[i] + re_parts[i])) <= gap + eps:
                    bad = (i, j)
                    break
            if bad is not None:
                blocking[0] = bad
                continue
            found = search(prefix + [cand])
            if found is not None:
                return found
        return None

    found = search([])
    if found is None:
        raise InfeasibleBall(
            f"no level choice separates slots {blocking[0]} at radius {radius}",
            blocking[0])
    return tuple(found)


def choose_levels(thetas: Mapping[str, Sequence[complex]], ball_radius: float = 0.0,
                  config: Config = DEFAULT) -> LevelChoice:
    """Levels b with every b_j + Re(eta_j) distinct for eta within the ball.

    Tries the evenly spaced default first, then a depth-first search over the
    midpoints of a grid of resolution 1/(8 r^2), smallest candidates first.
    """
    if ball_radius < 0:
        raise InputError("ball_radius must be >= 0")
    return {t: _choose_one([complex(v).real for v in vals], ball_radius, config.eps_eq)
            for t, vals in thetas.items()}


def real_jumps(b: LevelChoice, thetas: Mapping[str, Sequence[complex]]) -> dict:
    out = {}
    for t, vals in thetas.items():
        if len(b[t]) != len(vals):
            raise InputError(f"level choice at {t!r} has the wrong length")
        out[t] = tuple(bj + complex(v).real for bj, v in zip(b[t], vals))
    return out


def monodromy_shadow(theta: complex, lam: complex, orientation: int = 1) -> complex:
    if lam == 0:
        raise LambdaZero("monodromy needs lambda != 0")
    return cmath.exp(-orientation * 2j * math.pi * complex(theta) / complex(lam))


def rescaled(s: ResidueShadow) -> dict:
    if s.lam == 0:
        raise LambdaZero("rescaling needs lambda != 0")
    return {t: tuple(v / s.lam for v in vals) for t, vals in s.theta.items()}


def betti_shadow(s: ResidueShadow, b: LevelChoice | None = None,
                 orientation: int = 1, config: Config = DEFAULT) -> BettiShadow:
    resc = rescaled(s)
    if b is None:
        b = choose_levels(resc, 0.0, config)
    jumps = real_jumps(b, resc)
    out = {}
    for t, vals in s.theta.items():
        entries = [BettiEntry(monodromy_shadow(v, s.lam, orientation), jumps[t][k], k)
                   for k, v in enumerate(vals)]
        out[t] = tuple(sorted(entries, key=lambda e: (e.jump, e.slot)))
    return out


def betti_to_json(B: BettiShadow) -> dict:
    return {t: [{"mu": [e.mu.real, e.mu.imag], "jump": e.jump} for e in entries]
            for t, entries in B.items()}


def conjugate_shadow(s: ResidueShadow) -> ResidueShadow:
    """The shadow in the conjugate-curve chart at mu = 1/lambda.

    theta_c = mu * conj(theta / lambda), which is conj(theta) on |lambda| = 1.
    Slot order and degree are kept.
    """
    if s.lam == 0:
        raise LambdaZero("the conjugate chart needs lambda != 0")
    mu = 1.0 / s.lam
    theta = {t: tuple(mu * (v / s.lam).conjugate() for v in vals)
             for t, vals in s.theta.items()}
    return ResidueShadow(mu, theta, s.degree)


def conjugate_point(x: KmsPoint) -> KmsPoint:
    return KmsPoint(x.a, x.alpha.conjugate())


def conjugate_harmonic(shadow: HarmonicShadow) -> HarmonicShadow:
    """KMS data of the conjugate harmonic bundle: (a, alpha) -> (a, conj alpha)."""
    punctures = tuple(
        (t, KmsSpectrum(spectrum.rank, tuple(conjugate_point(x) for x in spectrum.points)))
        for t, spectrum in shadow.punctures)
    return HarmonicShadow(shadow.rank, punctures, shadow.genus)


def multiset_distance(xs: Sequence[complex], ys: Sequence[complex],
                      relative: bool = False) -> float:
    """Bottleneck distance between two equal-size multisets of complex numbers.

    With ``relative`` each difference is divided by max(1, |x|).
    """
    xs, ys = list(xs), list(ys)
    if len(xs) != len(ys):
        return math.inf

    def gap(x, y):
        d = abs(x - y)
        return d / max(1.0, abs(x)) if relative else d

    if len(xs) <= 7:
        return min(max((gap(x, ys[p]) for x, p in zip(xs, perm)), default=0.0)
                   for perm in itertools.permutations(range(len(ys))))
    key = lambda z: (round(z.real, 6), round(z.imag, 6))  # noqa: E731
    return max(gap(x, y) for x, y in zip(sorted(xs, key=key), sorted(ys, key=key)))


# --------------------------------------------------------------------------
# rank-1 flat-section model


@dataclass(frozen=True)
class Rank1Readout:
    jump: float
    monodromy: complex


def _flat_section(p: float, s: complex, conj_coord: bool):
    """Norm-carrying flat section |z|^-p * z^-s (or w^-s with w = conj z).

    The phase factor is continued along the path by the caller; only the
    local power function is returned here.
    """
    def value(z: complex, log_z: complex) -> complex:
        log_w = log_z.conjugate() if conj_coord else log_z
        return cmath.exp(-p * log_z.real) * cmath.exp(-s * log_w)
    return value


def rank1_readout(p: float, e: complex, lam: complex, conj_coord: bool = False,
                  steps: int = 256, radii=(1e-3, 1e-7)) -> Rank1Readout:
    """Numerically read the growth exponent and monodromy of a rank-1 flat section.

    The section has norm growth |z|^-p from its parabolic frame and carries the
    multivalued factor z^(-e/lam); on the conjugate chart the coordinate is
    w = conj(z).  The loop is the positively oriented circle in z.
    """
    s = e / lam
    f = _flat_section(p, s, conj_coord)
    r1, r2 = radii
    g1 = abs(f(r1, complex(math.log(r1), 0.0)))
    g2 = abs(f(r2, complex(math.log(r2), 0.0)))
    jump = -math.log(g2 / g1) / math.log(r2 / r1)
    # continue the branch of log z around the unit circle
    z0 = 0.5
    log_z = complex(math.log(z0), 0.0)
    start = f(z0, log_z)
    prev = z0
    for k in range(1, steps + 1):
        z = z0 * cmath.exp(2j * math.pi * k / steps)
        log_z += cmath.log(z / prev)
        prev = z
    end = f(prev, log_z)
    return Rank1Readout(jump, end / start)


def rank1_oracle(x: KmsPoint, lam: complex,
                 conjugate=conjugate_point) -> tuple[Rank1Readout, Rank1Readout]:
    """Readouts on the X chart at lam and the conjugate chart at 1/lam."""
    fx = flow(x, lam)
    mu = 1.0 / lam
    fc = flow(conjugate(x), mu)
    return (rank1_readout(fx.p, fx.e, lam),
            rank1_readout(fc.p, fc.e, mu, conj_coord=True))
