"""Preferred-section shadow: local orderings and the transitions between them.

A sample at lambda picks, for every KMS point, the integer shift putting its
flowed level into the window (c-1, c], and orders the slots by level with an
eigenvalue tie-break.  Two samples are related by a groupoid element whose
permutation matches KMS indices and whose shifts are the differences of the
chosen representatives.
"""
from __future__ import annotations

import cmath
import csv
import functools
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Config
from .errors import DomainViolation, InputError, OrderingAmbiguous, PathThroughWall
from .hecke import AffineAction, NormalForm, ResidueShadow, Word, normal_form, realize_normal_form
from .kms import HarmonicShadow, flow, reduce_mod_one, window_shift
from .rh import betti_shadow, choose_levels, conjugate_harmonic, conjugate_shadow, multiset_distance
from .walls import Cover, Disc, delta_in_region


@dataclass(frozen=True)
class Slot:
    kms_index: int
    rep_shift: int
    p: float
    e: complex


@dataclass(frozen=True)
class SectionSample:
    lam: complex
    slots: dict  # puncture -> tuple[Slot, ...] in slot order
    source: HarmonicShadow = field(compare=False, repr=False)
    order_ok: bool = True

    def residue_shadow(self, degree: int = 0) -> ResidueShadow:
        return ResidueShadow(self.lam, {t: tuple(s.e for s in ss) for t, ss in self.slots.items()},
                             degree)

    def continued(self, lam: complex) -> "SectionSample":
        """Same representatives and slot order, re-evaluated at ``lam``."""
        lam = complex(lam)
        slots = {}
        for t, ss in self.slots.items():
            spectrum = self.source.spectrum(t)
            out = []
            for s in ss:
                f = flow(spectrum.points[s.kms_index], lam)
                out.append(Slot(s.kms_index, s.rep_shift, f.p + s.rep_shift,
                                f.e - s.rep_shift * lam))
            slots[t] = tuple(out)
        return SectionSample(lam, slots, self.source, self.order_ok)

    def monodromy(self) -> dict:
        if self.lam == 0:
            raise InputError("monodromy needs lambda != 0")
        return {t: [cmath.exp(-2j * math.pi * s.e / self.lam) for s in ss]
                for t, ss in self.slots.items()}


def _compare(eps):
    def cmp(u: Slot, v: Slot) -> int:
        if abs(u.p - v.p) > eps:
            return -1 if u.p < v.p else 1
        for a, b in ((u.e.real, v.e.real), (u.e.imag, v.e.imag)):
            if abs(a - b) > eps:
                return -1 if a < b else 1
        return 0
    return cmp


def local_order(shadow: HarmonicShadow, lam: complex, config: Config = DEFAULT) -> SectionSample:
    lam = complex(lam)
    eps = config.eps_eq
    cmp = _compare(eps)
    slots = {}
    order_ok = True
    for t, spectrum in shadow.punctures:
        raw = []
        for q, x in enumerate(spectrum.points):
            f = flow(x, lam)
            k = window_shift(f.p, config.window_anchor)
            raw.append(Slot(q, k, f.p + k, f.e - k * lam))
        ordered = sorted(raw, key=functools.cmp_to_key(cmp))
        for u, v in zip(ordered, ordered[1:]):
            if cmp(u, v) == 0:
                raise OrderingAmbiguous(
                    f"KMS points {u.kms_index} and {v.kms_index} at {t!r} tie in level "
                    f"and eigenvalue at lambda = {lam}")
        # condition (O): equal eigenvalues appear with increasing level
        for u, v in itertools.combinations(ordered, 2):
            if abs(u.e - v.e) <= eps and not u.p < v.p:
                order_ok = False
        slots[t] = tuple(ordered)
    return SectionSample(lam, slots, shadow, order_ok)


def window_defect(sample: SectionSample, config: Config = DEFAULT) -> float:
    """Largest error when recomputing the stored (p, e) from the representatives,
    or inf if some level left the window."""
    c = config.window_anchor
    worst = 0.0
    for t, ss in sample.slots.items():
        spectrum = sample.source.spectrum(t)
        for s in ss:
            # a level a hair above c stays at c + ulp rather than rounding onto c - 1
            if not (c - 1 < s.p <= c + 1e-12):
                return math.inf
            f = flow(spectrum.points[s.kms_index], sample.lam)
            worst = max(worst, abs(f.p + s.rep_shift - s.p),
                        abs(f.e - s.rep_shift * sample.lam - s.e))
    return worst


# --------------------------------------------------------------------------
# transitions


@dataclass(frozen=True)
class Transition:
    from_id: int
    to_id: int
    normal_form: NormalForm
    word: Word


def _collisions(sample: SectionSample, eps: float):
    """Slot pairs whose eigenvalues agree modulo lambda*Z."""
    lam = sample.lam
    out = []
    for t, ss in sample.slots.items():
        for a, b in itertools.combinations(range(len(ss)), 2):
            d = ss[a].e - ss[b].e
            if lam == 0:
                hit = abs(d) <= eps
            else:
                z = d / lam
                hit = abs(z.imag) <= eps and abs(reduce_mod_one(z.real)) <= eps
            if hit:
                out.append((t, a + 1, b + 1))
    return out


def transition(s1: SectionSample, s2: SectionSample, from_id: int = 0, to_id: int = 1,
               config: Config = DEFAULT) -> Transition:
    eps = config.eps_eq
    if set(s1.slots) != set(s2.slots):
        raise InputError("samples have different punctures")
    moved = s1.continued(s2.lam) if s1.lam != s2.lam else s1
    actions = {}
    for t, ss1 in s1.slots.items():
        ss2 = s2.slots[t]
        pos2 = {s.kms_index: k for k, s in enumerate(ss2)}
        if set(pos2) != {s.kms_index for s in ss1}:
            raise InputError(f"slot sets at {t!r} do not correspond")
        sigma = tuple(pos2[s.kms_index] for s in ss1)
        m = tuple(s.rep_shift - ss2[pos2[s.kms_index]].rep_shift for s in ss1)
        actions[t] = AffineAction(sigma, m)
    r = s1.source.rank
    word = realize_normal_form(actions)
    nf = normal_form(word, r, list(s1.slots))
    for sample in (s1, moved, s2):
        hits = _collisions(sample, eps)
        if hits:
            raise DomainViolation(
                f"eigenvalues coincide modulo lambda*Z at lambda = {sample.lam}: {hits}")
    for sample in (s1, moved):
        bad = nf.violated_at(sample.residue_shadow(), eps)
        if bad:
            raise DomainViolation(f"transition leaves its domain at lambda = {sample.lam}: {bad}")
    image = nf.act(moved.residue_shadow())
    target = s2.residue_shadow()
    for t in target.theta:
        for u, v in zip(image.theta[t], target.theta[t]):
            if abs(u - v) > 1e-9 * max(1.0, abs(v)):
                raise DomainViolation(f"transition image mismatch at {t!r}: {u} vs {v}")
    return Transition(from_id, to_id, nf, word)


def monodromy_step_error(s1: SectionSample, s2: SectionSample, tr: Transition) -> float:
    """Relative distance between the per-puncture multisets exp(-2 pi i theta/lambda)
    before and after applying a transition at the far endpoint."""
    moved = s1.continued(s2.lam).residue_shadow()
    image = tr.normal_form.act(moved)
    worst = 0.0
    for t in moved.theta:
        before = [cmath.exp(-2j * math.pi * v / moved.lam) for v in moved.theta[t]]
        after = [cmath.exp(-2j * math.pi * v / image.lam) for v in image.theta[t]]
        worst = max(worst, multiset_distance(before, after, relative=True))
    return worst


# --------------------------------------------------------------------------
# paths


@dataclass
class PathTrace:
    samples: list[SectionSample]
    transitions: list[Transition]
    holonomy: NormalForm
    closed: bool


def _segment_distance(z: complex, a: complex, b: complex) -> float:
    d = b - a
    if d == 0:
        return abs(z - a)
    s = ((z - a) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(z - (a + s * d))


def check_path(shadow: HarmonicShadow, path, config: Config = DEFAULT) -> None:
    """Raise PathThroughWall if the polyline comes within eps_path of a collision point.

    Collision points accumulate at 0, so the check covers |lambda| >= 1e-3.
    """
    pts = [complex(z) for z in path]
    if len(pts) < 2:
        return
    d0 = min(_segment_distance(0j, a, b) for a, b in zip(pts, pts[1:]))
    r_lo = max(d0 - config.eps_path, 1e-3)
    r_hi = max(abs(z) for z in pts) + config.eps_path
    if r_hi < r_lo:
        return
    ws = delta_in_region(shadow, r_lo, r_hi, config)
    for d in ws.delta_points:
        for a, b in zip(pts, pts[1:]):
            if _segment_distance(d.lam, a, b) <= config.eps_path:
                raise PathThroughWall(
                    f"path passes within {config.eps_path} of collision point {d.lam} "
                    f"(puncture {d.witness.puncture}, pair {d.witness.i},{d.witness.j}, "
                    f"n = {d.witness.n})", d.lam)


def _step(shadow, s1, lam2, config, depth=0):
    """Samples and transitions from s1 to lambda2, bisecting on domain failure."""
    s2 = local_order(shadow, lam2, config)
    try:
        return [s2], [transition(s1, s2, config=config)]
    except DomainViolation:
        if depth >= 20:
            raise
    mid = 0.5 * (s1.lam + lam2)
    sa, ta = _step(shadow, s1, mid, config, depth + 1)
    sb, tb = _step(shadow, sa[-1], lam2, config, depth + 1)
    return sa + sb, ta + tb


def trace_path(shadow: HarmonicShadow, path, config: Config = DEFAULT) -> PathTrace:
    pts = [complex(z) for z in path]
    if not pts:
        raise InputError("path needs at least one point")
    check_path(shadow, pts, config)
    samples = [local_order(shadow, pts[0], config)]
    transitions: list[Transition] = []
    for lam in pts[1:]:
        ss, ts = _step(shadow, samples[-1], lam, config)
        samples += ss
        transitions += ts
    for k, tr in enumerate(transitions):
        transitions[k] = Transition(k, k + 1, tr.normal_form, tr.word)
    word = Word()
    for tr in transitions:
        word = tr.word * word
    holonomy = normal_form(word, shadow.rank, shadow.labels)
    closed = len(pts) > 1 and abs(pts[0] - pts[-1]) <= config.eps_eq
    return PathTrace(samples, transitions, holonomy, closed)


def circle_path(center: complex, radius: float, n: int) -> list[complex]:
    return [center + radius * cmath.exp(2j * math.pi * k / n) for k in range(n)] + [center + radius]


# --------------------------------------------------------------------------
# covers


@dataclass
class CocycleReport:
    passed: bool
    pairs: int
    triples: int
    failures: list[dict]

    def to_json(self) -> dict:
        return {"passed": self.passed, "pairs": self.pairs, "triples": self.triples,
                "failures": self.failures}


def _base_sample(shadow, disc: Disc, config):
    """local_order at the disc centre, or at a nearby point if the centre is degenerate."""
    candidates = [disc.center] + [disc.center + 0.5 * disc.radius * cmath.exp(1j * (0.3 + k))
                                  for k in range(8)]
    for z in candidates:
        try:
            return local_order(shadow, z, config)
        except OrderingAmbiguous:
            continue
    raise OrderingAmbiguous(f"no unambiguous base point in disc at {disc.center}")


def _circle_points(d1: Disc, d2: Disc) -> list[complex]:
    v = d2.center - d1.center
    dist = abs(v)
    if dist == 0 or dist >= d1.radius + d2.radius or dist <= abs(d1.radius - d2.radius):
        return []
    a = (d1.radius ** 2 - d2.radius ** 2 + dist ** 2) / (2 * dist)
    h = math.sqrt(max(d1.radius ** 2 - a * a, 0.0))
    base = d1.center + a * v / dist
    off = h * 1j * v / dist
    return [base + off, base - off]


def lens_midpoint(d1: Disc, d2: Disc) -> complex:
    v = d2.center - d1.center
    dist = abs(v)
    if dist == 0:
        return d1.center
    lo = max(-d1.radius, dist - d2.radius)
    hi = min(d1.radius, dist + d2.radius)
    return d1.center + 0.5 * (lo + hi) * v / dist


def _pair_witness(d1: Disc, d2: Disc, excluded) -> complex:
    for q in excluded:
        if d1.contains(q) and d2.contains(q):
            return q
    return lens_midpoint(d1, d2)


def _triple_meets(d1: Disc, d2: Disc, d3: Disc) -> bool:
    # A nonempty triple overlap either contains a centre or has a corner where
    # two circles cross inside the third; corners sit on two boundaries, so
    # they are pushed slightly into their lens before testing.
    discs = (d1, d2, d3)
    cands = [d.center for d in discs]
    for a, b in itertools.combinations(discs, 2):
        mid = lens_midpoint(a, b)
        cands.append(mid)
        for z in _circle_points(a, b):
            cands += [z + f * (mid - z) for f in (1e-6, 1e-3, 0.05)]
    return any(all(d.contains(z, 1e-12) for d in discs) for z in cands)


def cocycle_check(shadow: HarmonicShadow, cover: Cover, config: Config = DEFAULT) -> CocycleReport:
    discs = cover.discs
    n = len(discs)
    bases = [_base_sample(shadow, d, config) for d in discs]
    centers = np.array([d.center for d in discs])
    radii = np.array([d.radius for d in discs])
    dist = np.abs(centers[:, None] - centers[None, :])
    meets = (dist < radii[:, None] + radii[None, :]) & ~np.eye(n, dtype=bool)
    failures: list[dict] = []
    trans: dict = {}
    pairs = 0
    for a, b in zip(*np.nonzero(np.triu(meets))):
        a, b = int(a), int(b)
        pairs += 1
        w = _pair_witness(discs[a], discs[b], cover.excluded)
        try:
            tr = transition(bases[a].continued(w), bases[b].continued(w), a, b, config)
            trans[(a, b)] = tr.normal_form
        except DomainViolation as exc:
            failures.append({"kind": "pair", "discs": [a, b],
                             "witness": [w.real, w.imag], "error": str(exc)})
    triples = 0
    identity = NormalForm.identity(shadow.rank, shadow.labels)
    for a in range(n):
        nbrs = [int(b) for b in np.nonzero(meets[a])[0] if b > a]
        for b, c in itertools.combinations(nbrs, 2):
            if not meets[b, c] or not _triple_meets(discs[a], discs[b], discs[c]):
                continue
            triples += 1
            g_ab, g_bc, g_ac = trans.get((a, b)), trans.get((b, c)), trans.get((a, c))
            if g_ab is None or g_bc is None or g_ac is None:
                continue  # already reported as a pair failure
            product = g_ab.then(g_bc)
            loop = product.then(_inverse(g_ac))
            if not product.same_element(g_ac) or not loop.same_element(identity):
                failures.append({"kind": "triple", "discs": [a, b, c],
                                 "product": product.to_json(), "direct": g_ac.to_json()})
    return CocycleReport(not failures, pairs, triples, failures)


def _inverse(nf: NormalForm) -> NormalForm:
    return NormalForm({t: a.inverse() for t, a in nf.actions.items()}, -nf.degree)


# --------------------------------------------------------------------------
# gluing to the conjugate chart


@dataclass
class GlueReport:
    passed: bool
    lam: complex
    monodromy_error: float
    jump_error: float
    harmonic_route_error: float

    def to_json(self) -> dict:
        return {"passed": self.passed, "lambda": [self.lam.real, self.lam.imag],
                "monodromy_error": self.monodromy_error, "jump_error": self.jump_error,
                "harmonic_route_error": self.harmonic_route_error}


def glue_infinity(shadow: HarmonicShadow, lam: complex, tol: float = 1e-9,
                  config: Config = DEFAULT) -> GlueReport:
    """Compare the Betti shadow on X at lambda with the conjugate chart at 1/lambda.

    The conjugate side is computed twice: by transforming the residue shadow
    and, independently, from the conjugate KMS data sampled at 1/lambda.  The
    second route only agrees on |lambda| = 1, where it is required to.
    """
    lam = complex(lam)
    if lam == 0:
        raise InputError("glue_infinity needs lambda != 0")
    sx = local_order(shadow, lam, config).residue_shadow()
    sc = conjugate_shadow(sx)
    levels = choose_levels({t: [v / lam for v in vals] for t, vals in sx.theta.items()},
                           0.0, config)
    bx = betti_shadow(sx, levels, 1, config)
    bc = betti_shadow(sc, levels, -1, config)
    mono = jump = 0.0
    for t in bx:
        mono = max(mono, multiset_distance([e.mu.conjugate() for e in bx[t]],
                                           [e.mu for e in bc[t]]))
        jump = max(jump, max(abs(u.jump - v.jump) for u, v in zip(bx[t], bc[t])))
    route = 0.0
    on_circle = abs(abs(lam) - 1.0) <= 1e-12
    if on_circle:
        mu = 1.0 / lam
        sh = local_order(conjugate_harmonic(shadow), mu, config).residue_shadow()
        bh = betti_shadow(sh, None, -1, config)
        for t in bx:
            # monodromies, and the rescaled real parts that determine the jumps
            route = max(route,
                        multiset_distance([e.mu for e in bc[t]], [e.mu for e in bh[t]]),
                        multiset_distance([(v / sc.lam).real for v in sc.theta[t]],
                                          [(v / sh.lam).real for v in sh.theta[t]]))
    passed = mono <= tol and jump <= tol and route <= tol
    return GlueReport(passed, lam, mono, jump, route)


# --------------------------------------------------------------------------
# output


def write_section_csv(path, samples: list[SectionSample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "re_lambda", "im_lambda", "puncture", "slot", "kms_index",
                    "rep_shift", "p", "re_e", "im_e"])
        for sid, s in enumerate(samples):
            for t, ss in s.slots.items():
                for k, sl in enumerate(ss, start=1):
                    w.writerow([sid, repr(s.lam.real), repr(s.lam.imag), t, k, sl.kms_index,
                                sl.rep_shift, repr(sl.p), repr(sl.e.real), repr(sl.e.imag)])


def transitions_to_json(transitions: list[Transition]) -> list[dict]:
    return [{"from": tr.from_id, "to": tr.to_id, "normal_form": tr.normal_form.to_json()}
            for tr in transitions]


def write_transitions_json(path, transitions: list[Transition]) -> None:
    with open(path, "w") as fh:
        json.dump(transitions_to_json(transitions), fh, indent=2, sort_keys=True)
        fh.write("\n")
