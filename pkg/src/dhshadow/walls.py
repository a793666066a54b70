"""Eigenvalue-collision points and level walls in the lambda-plane, with covers avoiding them.

For two KMS points x, y the flowed eigenvalues satisfy

    e(x) - e(y) = lambda * f(lambda),   f(lambda) = A/lambda + B + C*lambda

so e(x) = e(y) mod lambda*Z exactly when f(lambda) is an integer n.  For each
n this is a quadratic in lambda.  Indices i < j in witnesses refer to the
0-based positions of the KMS points in the puncture's spectrum.
"""
from __future__ import annotations

import cmath
import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Config
from .errors import CoverFailure, DegenerateFamily, InputError
from .kms import HarmonicShadow, KmsPoint, flow, reduce_mod_one


@dataclass(frozen=True)
class Witness:
    puncture: str
    i: int
    j: int
    n: int


@dataclass(frozen=True)
class DeltaPoint:
    lam: complex
    witness: Witness
    coeffs: tuple[complex, float, complex]

    def residual(self) -> float:
        A, B, C = self.coeffs
        return abs(A / self.lam + B + C * self.lam - self.witness.n)


@dataclass(frozen=True)
class LevelWall:
    curve_id: int
    puncture: str
    i: int
    j: int
    m: int
    points: tuple[complex, ...]


@dataclass
class WallSet:
    r_min: float
    r_max: float
    delta_points: list[DeltaPoint] = field(default_factory=list)
    level_walls: list[LevelWall] = field(default_factory=list)

    def lambdas(self) -> list[complex]:
        return [d.lam for d in self.delta_points]


def collision_function(x: KmsPoint, y: KmsPoint) -> tuple[complex, float, complex]:
    A = x.alpha - y.alpha
    B = -(x.a - y.a)
    C = x.alpha.conjugate() - y.alpha.conjugate()
    return A, B, C


def evaluate(coeffs, lam: complex) -> complex:
    A, B, C = coeffs
    return A / lam + B + C * lam


def n_bound(coeffs, r_min: float, r_max: float) -> int:
    A, B, C = coeffs
    return math.ceil(abs(A) / r_min + abs(B) + abs(C) * r_max)


def _quadratic_roots(a: complex, b: complex, c: complex) -> list[complex]:
    """Roots of a z^2 + b z + c with the cancellation-free formula."""
    disc = cmath.sqrt(b * b - 4 * a * c)
    if (b.conjugate() * disc).real < 0:
        disc = -disc
    q = -0.5 * (b + disc)
    if q == 0:
        return [0j, 0j]
    return [q / a, c / q]


def solve_level(coeffs, n: int, tol: float) -> list[complex]:
    """Nonzero solutions of f(lambda) = n.

    Raises DegenerateFamily when f is the constant n.
    """
    A, B, C = (complex(v) for v in coeffs)
    b = B - n
    scale = max(abs(A), abs(C), 1.0)
    a_zero = abs(A) <= tol * scale
    c_zero = abs(C) <= tol * scale
    if a_zero and c_zero:
        if abs(b) <= tol:
            raise DegenerateFamily(
                f"collision function is the integer constant {n}")
        return []
    if c_zero:
        return [] if b == 0 else [-A / b]
    if a_zero:
        return [] if b == 0 else [-b / C]
    return _quadratic_roots(C, b, A)


def _polish(coeffs, n: int, lam: complex, steps: int = 3) -> complex:
    A, B, C = coeffs
    for _ in range(steps):
        g = A / lam + B + C * lam - n
        dg = -A / (lam * lam) + C
        if dg == 0 or g == 0:
            break
        nxt = lam - g / dg
        if abs(evaluate(coeffs, nxt) - n) >= abs(g):
            break
        lam = nxt
    return lam


def _sort_key(d: DeltaPoint):
    w = d.witness
    return (round(abs(d.lam), 12), round(cmath.phase(d.lam), 12), w.puncture, w.i, w.j, w.n)


def pair_delta(coeffs, witness_base: tuple[str, int, int], r_min: float, r_max: float,
               config: Config = DEFAULT) -> list[DeltaPoint]:
    t, i, j = witness_base
    out: list[DeltaPoint] = []
    N = n_bound(coeffs, r_min, r_max)
    for n in range(-N, N + 1):
        found: list[complex] = []
        for lam in solve_level(coeffs, n, config.eps_root):
            if lam == 0:
                continue
            lam = _polish(coeffs, n, lam)
            if not (r_min <= abs(lam) <= r_max):
                continue
            if abs(evaluate(coeffs, lam) - n) > config.eps_root:
                continue
            if any(abs(lam - f) <= 1e-9 * max(1.0, abs(lam)) for f in found):
                continue
            found.append(lam)
            out.append(DeltaPoint(lam, Witness(t, i, j, n), coeffs))
    return out


def delta_in_region(shadow: HarmonicShadow, r_min: float, r_max: float,
                    config: Config = DEFAULT) -> WallSet:
    if not (0 < r_min <= r_max):
        raise InputError("region needs 0 < r_min <= r_max")
    points: list[DeltaPoint] = []
    for t, spectrum in shadow.punctures:
        for i, j in itertools.combinations(range(spectrum.rank), 2):
            coeffs = collision_function(spectrum.points[i], spectrum.points[j])
            points += pair_delta(coeffs, (t, i, j), r_min, r_max, config)
    points.sort(key=_sort_key)
    return WallSet(r_min, r_max, points)


def flowed_gap(shadow: HarmonicShadow, d: DeltaPoint) -> float:
    """|e(x) - e(y) - n*lambda| at a collision point, computed via the flow."""
    spectrum = shadow.spectrum(d.witness.puncture)
    ex = flow(spectrum.points[d.witness.i], d.lam).e
    ey = flow(spectrum.points[d.witness.j], d.lam).e
    return abs(ex - ey - d.witness.n * d.lam)


# --------------------------------------------------------------------------
# level walls


def _level_coeffs(x: KmsPoint, y: KmsPoint):
    """p(x) - p(y) = c0 + gx*Re(lam) + gy*Im(lam)."""
    c0 = x.a - y.a
    d = x.alpha.conjugate() - y.alpha.conjugate()
    # 2 Re(lam * d) = 2 (Re lam Re d - Im lam Im d)
    return c0, 2.0 * d.real, -2.0 * d.imag


def level_walls(shadow: HarmonicShadow, r_min: float, r_max: float, samples: int = 400,
                config: Config = DEFAULT) -> list[LevelWall]:
    """Polylines where two levels agree mod Z, found by bracketing along grid edges."""
    if samples < 2:
        raise InputError("samples must be >= 2")
    if not (0 <= r_min <= r_max):
        raise InputError("region needs 0 <= r_min <= r_max")
    xs = np.linspace(-r_max, r_max, samples)
    X, Y = np.meshgrid(xs, xs)
    walls: list[LevelWall] = []
    cid = 0
    for t, spectrum in shadow.punctures:
        for i, j in itertools.combinations(range(spectrum.rank), 2):
            c0, gx, gy = _level_coeffs(spectrum.points[i], spectrum.points[j])
            grad = math.hypot(gx, gy)
            M = math.floor(abs(c0) + grad * r_max) + 1
            for m in range(-M, M + 1):
                G = c0 + gx * X + gy * Y - m
                pts = _bracket_edges(X, Y, G)
                pts = [z for z in pts if r_min <= abs(z) <= r_max]
                if not pts:
                    continue
                if grad > 0:
                    direction = complex(-gy, gx) / grad
                    pts.sort(key=lambda z: ((z * direction.conjugate()).real, z.real, z.imag))
                walls.append(LevelWall(cid, t, i, j, m, tuple(_dedupe(pts))))
                cid += 1
    return walls


def _bracket_edges(X, Y, G) -> list[complex]:
    out: list[complex] = []
    for axis in (0, 1):
        g0 = G[:-1, :] if axis == 0 else G[:, :-1]
        g1 = G[1:, :] if axis == 0 else G[:, 1:]
        x0 = X[:-1, :] if axis == 0 else X[:, :-1]
        x1 = X[1:, :] if axis == 0 else X[:, 1:]
        y0 = Y[:-1, :] if axis == 0 else Y[:, :-1]
        y1 = Y[1:, :] if axis == 0 else Y[:, 1:]
        hit = (g0 == 0) | (g0 * g1 < 0)
        idx = np.nonzero(hit)
        a, b = g0[idx], g1[idx]
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(a == 0, 0.0, a / (a - b))
        px = x0[idx] + s * (x1[idx] - x0[idx])
        py = y0[idx] + s * (y1[idx] - y0[idx])
        out += [complex(u, v) for u, v in zip(px.tolist(), py.tolist())]
    return out


def _dedupe(pts: list[complex], tol: float = 1e-12) -> list[complex]:
    out: list[complex] = []
    for z in pts:
        if not out or abs(z - out[-1]) > tol:
            out.append(z)
    return out


def level_gap(x: KmsPoint, y: KmsPoint, lam: complex) -> float:
    """Distance of p(x) - p(y) to the nearest integer."""
    return abs(reduce_mod_one(flow(x, lam).p - flow(y, lam).p))


# --------------------------------------------------------------------------
# completeness scan


def grid_scan(shadow: HarmonicShadow, r_min: float, r_max: float, resolution: int = 400,
              threshold: float = 1e-4) -> dict:
    """Brute-force check of a collision set on a square grid over the annulus.

    Every grid local minimum of |f - round(f)| is compared with the reported
    points.  Minima below ``threshold`` must lie within a grid diameter of a
    reported point.  Each minimum is also refined by Newton's method toward
    round(f); a converged in-region root must match a reported point.
    Returns a dict with the lists ``missed`` and ``refined_missed``.
    """
    ws = delta_in_region(shadow, r_min, r_max)
    reported = np.array(ws.lambdas(), dtype=complex)
    xs = np.linspace(-r_max, r_max, resolution)
    h = xs[1] - xs[0]
    diam = h * math.sqrt(2)
    X, Y = np.meshgrid(xs, xs)
    L = X + 1j * Y
    inside = (np.abs(L) >= r_min) & (np.abs(L) <= r_max)
    missed: list[complex] = []
    refined_missed: list[complex] = []
    for t, spectrum in shadow.punctures:
        for i, j in itertools.combinations(range(spectrum.rank), 2):
            coeffs = collision_function(spectrum.points[i], spectrum.points[j])
            A, B, C = coeffs
            with np.errstate(divide="ignore", invalid="ignore"):
                F = A / L + B + C * L
            D = np.abs(F - np.round(F.real))
            D = np.where(inside, D, np.inf)
            for z, f in _local_minima(L, D, F):
                near = reported.size and np.min(np.abs(reported - z)) <= diam
                if _integer_gap(f) < threshold and not near:
                    missed.append(z)
                root = _newton_to_integer(coeffs, z, round(f.real))
                if root is None or not (r_min <= abs(root) <= r_max):
                    continue
                # double roots converge only linearly, hence the loose match
                if not reported.size or np.min(np.abs(reported - root)) > 1e-6:
                    refined_missed.append(root)
    return {"missed": missed, "refined_missed": refined_missed,
            "reported": len(reported), "grid_step": float(h)}


def _integer_gap(f: complex) -> float:
    return abs(f - round(f.real))


def _local_minima(L, D, F):
    n = D.shape[0]
    P = np.pad(D, 1, constant_values=np.inf)
    centre = P[1:-1, 1:-1]
    is_min = np.isfinite(centre)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_min &= centre <= P[1 + di:n + 1 + di, 1 + dj:n + 1 + dj]
    for a, b in zip(*np.nonzero(is_min)):
        yield complex(L[a, b]), complex(F[a, b])


def _newton_to_integer(coeffs, z: complex, n: int, steps: int = 40):
    A, B, C = coeffs
    for _ in range(steps):
        g = A / z + B + C * z - n
        dg = -A / (z * z) + C
        if dg == 0:
            return None
        z = z - g / dg
        if z == 0 or not cmath.isfinite(z):
            return None
        if abs(A / z + B + C * z - n) < 1e-13:
            return z
    return None


# --------------------------------------------------------------------------
# covers


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float
    kind: str  # "origin", "delta" or "regular"

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return abs(z - self.center) < self.radius - slack

    def meets(self, other: "Disc") -> bool:
        return abs(self.center - other.center) < self.radius + other.radius


@dataclass
class Cover:
    radius: float
    origin_radius: float
    discs: list[Disc]
    excluded: list[complex]


def _choose_origin_radius(shadow, rho0, R, config):
    for _ in range(60):
        ws = delta_in_region(shadow, rho0 / 2, 3 * R, config)
        pts = ws.lambdas()
        if all(abs(abs(q) - rho0) > 1e-3 * rho0 for q in pts):
            return rho0, pts
        rho0 *= 0.95
    raise CoverFailure("could not place the origin disc away from collision points")


def build_cover(shadow: HarmonicShadow, R: float, rho0: float = 0.5, max_depth: int = 12,
                config: Config = DEFAULT) -> Cover:
    """Cover the disc |lambda| <= R by U_0, one disc per collision point and
    regular discs avoiding the excluded set {0} union collisions.

    Radii are half the distance to the excluded set, so any overlap of two
    distinct discs misses every excluded point.
    """
    if R <= 0 or rho0 <= 0:
        raise InputError("cover radii must be positive")
    rho0 = min(rho0, R)
    rho0, pts = _choose_origin_radius(shadow, rho0, R, config)
    excluded = [0j] + sorted(pts, key=lambda z: (abs(z), cmath.phase(z)))
    ex = np.array(excluded, dtype=complex)
    discs = [Disc(0j, rho0, "origin")]
    for q in excluded[1:]:
        if abs(q) <= rho0 or abs(q) > R:
            continue
        others = np.abs(ex - q)
        others = others[others > 0]
        rad = min(0.5 * float(np.min(others)), abs(q) - rho0) * 0.99
        if rad <= 0:
            raise CoverFailure(f"collision point {q} too close to its neighbours")
        discs.append(Disc(q, rad, "delta"))
    fixed = list(discs)

    def covered(corners):
        return any(all(d.contains(c) for c in corners) for d in fixed)

    stack = [(0j, float(R), 0)]
    regular: list[Disc] = []
    while stack:
        c, w, depth = stack.pop()
        if _dist_to_square(0j, c, w) > R:
            continue
        corners = [c + complex(sx * w, sy * w) for sx in (-1, 1) for sy in (-1, 1)]
        if covered(corners):
            continue
        need = w * math.sqrt(2)
        allowed = min(0.5 * float(np.min(np.abs(ex - c))), abs(c) - rho0 / 2)
        if need < allowed:
            regular.append(Disc(c, min(allowed, 1.05 * need), "regular"))
            continue
        if depth >= max_depth:
            raise CoverFailure(f"cell at {c} not resolved at depth {max_depth}")
        h = w / 2
        for sx, sy in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
            stack.append((c + complex(sx * h, sy * h), h, depth + 1))
    regular.sort(key=lambda d: (d.center.real, d.center.imag))
    return Cover(R, rho0, discs + regular, excluded)


def _dist_to_square(z: complex, c: complex, w: float) -> float:
    dx = max(abs(z.real - c.real) - w, 0.0)
    dy = max(abs(z.imag - c.imag) - w, 0.0)
    return math.hypot(dx, dy)


def verify_cover(cover: Cover, samples: int = 200) -> list[str]:
    """Geometric checks; returns a list of problems (empty if valid)."""
    problems = []
    for q in cover.excluded:
        if abs(q) > cover.radius:
            continue
        owners = [k for k, d in enumerate(cover.discs) if d.contains(q)]
        if len(owners) != 1:
            problems.append(f"excluded point {q} lies in discs {owners}")
    xs = np.linspace(-cover.radius, cover.radius, samples)
    for x in xs:
        for y in xs:
            z = complex(x, y)
            if abs(z) <= cover.radius and not any(d.contains(z) for d in cover.discs):
                problems.append(f"point {z} uncovered")
    return problems


# --------------------------------------------------------------------------
# CSV output


def write_delta_csv(path, ws: WallSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "puncture", "i", "j", "n"])
        for d in ws.delta_points:
            w.writerow([repr(d.lam.real), repr(d.lam.imag), d.witness.puncture,
                        d.witness.i, d.witness.j, d.witness.n])


def write_walls_csv(path, walls: list[LevelWall]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve_id", "re", "im", "puncture", "i", "j", "m"])
        for wall in walls:
            for z in wall.points:
                w.writerow([wall.curve_id, repr(z.real), repr(z.imag), wall.puncture,
                            wall.i, wall.j, wall.m])


def wallset_to_json(ws: WallSet) -> dict:
    return {
        "r_min": ws.r_min, "r_max": ws.r_max,
        "delta": [{"re": d.lam.real, "im": d.lam.imag, "puncture": d.witness.puncture,
                   "i": d.witness.i, "j": d.witness.j, "n": d.witness.n}
                  for d in ws.delta_points],
        "walls": [{"curve_id": w.curve_id, "puncture": w.puncture, "i": w.i, "j": w.j,
                   "m": w.m, "points": [[z.real, z.imag] for z in w.points]}
                  for w in ws.level_walls],
    }
