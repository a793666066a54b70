"""Randomized invariant suites run by ``dhshadow check``.

Each suite draws from its own generator seeded by (seed, suite name), so
suites can run alone or together with identical results.
"""
from __future__ import annotations

import cmath
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .betti import (compose_check, eigenvalue_map, flag_distance, flag_surgery,
                    random_local_system, random_permutation, swap_adjacent,
                    system_flag_distance)
from .config import DEFAULT, Config
from .errors import DomainViolation
from .hecke import (H, ResidueShadow, T, U, Word, apply_word, deligne_normalize,
                    normal_form)
from .kms import HarmonicShadow, KmsPoint, flow, lattice_shift
from .rh import conjugate_point, multiset_distance, rank1_oracle
from .section import (circle_path, cocycle_check, glue_infinity, monodromy_step_error,
                      trace_path)
from .twistor import (WeightProfile, filtration_product_check, generating_coefficients,
                      sym_check, twistor_h0, weight_table)
from .walls import build_cover, delta_in_region, flowed_gap, grid_scan

MODEL = HarmonicShadow.from_pairs({"t": [(0.0, 0.0), (0.0, 1.0)]})


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    checks: int = 0
    metrics: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def record(self, ok: bool, detail=None):
        self.checks += 1
        if not ok:
            self.passed = False
            if len(self.failures) < 20:
                self.failures.append(detail)

    def metric(self, key: str, value: float):
        self.metrics[key] = max(self.metrics.get(key, 0.0), float(value))

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": self.checks,
                "metrics": dict(sorted(self.metrics.items())), "failures": self.failures}


def _rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def random_point(rng) -> KmsPoint:
    return KmsPoint(-rng.uniform(0, 1), complex(*rng.normal(size=2)))


def random_lambda(rng, floor: float = 0.2) -> complex:
    while True:
        z = complex(*rng.normal(size=2))
        if abs(z) >= floor:
            return z


def random_residue_shadow(rng, rank: int, punctures: int, lam=None) -> ResidueShadow:
    lam = random_lambda(rng) if lam is None else lam
    theta = {f"t{k + 1}": tuple(complex(*(2 * rng.normal(size=2)))
                                for _ in range(rank))
             for k in range(punctures)}
    return ResidueShadow(lam, theta)


def random_word(rng, punctures, rank: int, length: int) -> Word:
    letters = []
    for _ in range(length):
        t = punctures[int(rng.integers(len(punctures)))]
        kind = int(rng.integers(5 if rank > 1 else 4))
        if kind == 0:
            letters.append(H(t))
        elif kind == 1:
            letters.append(H(t).inverted())
        elif kind == 2:
            letters.append(U(t))
        elif kind == 3:
            letters.append(U(t).inverted())
        else:
            letters.append(T(t, int(rng.integers(1, rank))))
    return Word(tuple(letters))


def _rewrite(rng, w: Word, punctures, rank: int) -> Word:
    """An equal group element written differently: insert a relator somewhere."""
    t = punctures[int(rng.integers(len(punctures)))]
    choices = [Word.of(U(t)) * Word.of(H(t)) ** rank,
               Word.of(H(t)) ** rank * Word.of(U(t)),
               Word.of(H(t)) * Word.of(H(t).inverted())]
    if rank > 1:
        i = int(rng.integers(1, rank))
        choices.append(Word.of(T(t, i), T(t, i)))
    rel = choices[int(rng.integers(len(choices)))]
    cut = int(rng.integers(len(w) + 1))
    return Word(w.factors[:cut]) * rel * Word(w.factors[cut:])


# --------------------------------------------------------------------------


def suite_flow(seed: int, config: Config = DEFAULT, n: int = 1000) -> SuiteResult:
    res = SuiteResult("flow")
    rng = _rng(seed, "flow")
    for _ in range(n):
        x = random_point(rng)
        k = int(rng.integers(-5, 6))
        lam = random_lambda(rng, 0.0)
        f0, f1 = flow(x, lam), flow(lattice_shift(x, k), lam)
        err = max(abs(f1.p - f0.p - k), abs(f1.e - f0.e + k * lam))
        res.metric("max_error", err)
        res.record(err <= 1e-12, {"a": x.a, "k": k, "error": err})
    return res


def suite_groupoid(seed: int, config: Config = DEFAULT, n: int = 500) -> SuiteResult:
    res = SuiteResult("groupoid")
    rng = _rng(seed, "groupoid")
    for _ in range(n):
        r = int(rng.integers(1, 6))
        k = int(rng.integers(1, 4))
        s = random_residue_shadow(rng, r, k)
        for t in s.punctures:
            relators = [Word.of(U(t)) * Word.of(H(t)) ** r, Word.of(H(t)) ** r * Word.of(U(t))]
            relators += [Word.of(T(t, i), T(t, i)) for i in range(1, r)]
            for w in relators:
                nf = normal_form(w, r, s.punctures)
                res.record(nf.is_identity(), {"word": str(w), "normal_form": nf.to_json()})
                out = apply_word(w, s, config)
                err = max(abs(u - v) for u, v in zip(out.theta[t], s.theta[t]))
                res.metric("max_theta_error", err)
                res.record(err <= 1e-12 and out.degree == s.degree,
                           {"word": str(w), "error": err})
    return res


def suite_injectivity(seed: int, config: Config = DEFAULT, n: int = 500) -> SuiteResult:
    res = SuiteResult("injectivity")
    rng = _rng(seed, "injectivity")
    agree_count = 0
    for _ in range(n):
        r = int(rng.integers(1, 5))
        k = int(rng.integers(1, 3))
        s = random_residue_shadow(rng, r, k)
        w1 = random_word(rng, s.punctures, r, int(rng.integers(0, 7)))
        if rng.random() < 0.5:
            w2 = _rewrite(rng, w1, s.punctures, r)
        else:
            w2 = random_word(rng, s.punctures, r, int(rng.integers(0, 7)))
        try:
            agree = apply_word(w1, s, config).close_to(apply_word(w2, s, config), 1e-9)
        except DomainViolation:
            continue
        same = normal_form(w1, r, s.punctures).same_element(normal_form(w2, r, s.punctures))
        agree_count += agree
        res.record(agree == same, {"w1": str(w1), "w2": str(w2), "agree": agree, "same": same})
    res.metrics["agreeing_pairs"] = float(agree_count)
    return res


def suite_betti(seed: int, config: Config = DEFAULT, n: int = 100) -> SuiteResult:
    res = SuiteResult("betti")
    rng = _rng(seed, "betti")
    for _ in range(n):
        r = int(rng.integers(2, 6))
        L = random_local_system(rng, r, 2)
        sigma = {t: random_permutation(rng, r) for t in L.punctures}
        tau = {t: random_permutation(rng, r) for t in L.punctures}
        a = flag_surgery(sigma, L, "bubble", config=config)
        b = flag_surgery(sigma, L, "random", rng, config)
        c = flag_surgery(sigma, L, "reverse", config=config)
        d = max(system_flag_distance(a, b), system_flag_distance(a, c))
        res.metric("decomposition_angle", d)
        res.record(d <= config.eps_flag, {"rank": r, "angle": d})
        A, A2 = eigenvalue_map(L, config), eigenvalue_map(a, config)
        moved = max(abs(A2[t][sigma[t][i]] - A[t][i]) for t in L.punctures for i in range(r))
        res.metric("eigenvalue_error", moved)
        res.record(moved <= 1e-8, {"rank": r, "eigenvalue_error": moved})
        t = L.punctures[0]
        F, g = L.flag(t), L.loop(t)
        p = int(rng.integers(r - 1))
        back = swap_adjacent(swap_adjacent(F, g, p), g, p)
        inv = flag_distance(F, back)
        res.metric("involution_angle", inv)
        res.record(inv <= config.eps_flag, {"rank": r, "involution_angle": inv})
        if r >= 3:
            p = int(rng.integers(r - 2))
            lhs = swap_adjacent(swap_adjacent(swap_adjacent(F, g, p), g, p + 1), g, p)
            rhs = swap_adjacent(swap_adjacent(swap_adjacent(F, g, p + 1), g, p), g, p + 1)
            br = flag_distance(lhs, rhs)
            res.metric("braid_angle", br)
            res.record(br <= config.eps_flag, {"rank": r, "braid_angle": br})
        rep = compose_check(tau, sigma, L, config)
        res.metric("compose_angle", rep.max_angle)
        res.record(rep.passed, {"rank": r, "compose_angle": rep.max_angle})
    return res


def suite_walls(seed: int, config: Config = DEFAULT) -> SuiteResult:
    res = SuiteResult("walls")
    rng = _rng(seed, "walls")
    shadows = [MODEL]
    for _ in range(3):
        pts = [(p.a, p.alpha) for p in (random_point(rng) for _ in range(3))]
        shadows.append(HarmonicShadow.from_pairs({"t": pts}))
    for sh in shadows:
        ws = delta_in_region(sh, 0.1, 3.0, config)
        for d in ws.delta_points:
            res.metric("max_residual", d.residual())
            res.record(d.residual() <= config.eps_root, {"lambda": [d.lam.real, d.lam.imag]})
            gap = flowed_gap(sh, d)
            res.metric("max_flow_gap", gap)
            res.record(gap <= 1e-9, {"lambda": [d.lam.real, d.lam.imag], "gap": gap})
        scan = grid_scan(sh, 0.1, 3.0, config.grid_resolution)
        res.record(not scan["missed"] and not scan["refined_missed"],
                   {"missed": [[z.real, z.imag] for z in scan["missed"] + scan["refined_missed"]]})
    expected = _model_roots(0.1, 3.0)
    got = delta_in_region(MODEL, 0.1, 3.0, config).lambdas()
    res.record(multiset_distance(got, expected) <= 1e-9 if len(got) == len(expected) else False,
               {"expected": len(expected), "got": len(got)})
    return res


def _model_roots(r_min, r_max):
    """Roots of lambda^2 - n lambda + 1 = 0 in the annulus, one per distinct value."""
    roots = []
    N = math.ceil(1 / r_min + r_max)
    for n in range(-N, N + 1):
        for z in np.roots([1, -n, 1]):
            z = complex(z)
            if r_min <= abs(z) <= r_max and all(abs(z - w) > 1e-6 for w in roots):
                roots.append(z)
    return roots


def suite_monodromy(seed: int, config: Config = DEFAULT, n: int = 300) -> SuiteResult:
    res = SuiteResult("monodromy")
    rng = _rng(seed, "monodromy")

    def multisets(s):
        return {t: [cmath.exp(-2j * math.pi * v / s.lam) for v in vals]
                for t, vals in s.theta.items()}

    for _ in range(n):
        r = int(rng.integers(1, 5))
        s = random_residue_shadow(rng, r, int(rng.integers(1, 3)), random_lambda(rng, 0.5))
        w = random_word(rng, s.punctures, r, int(rng.integers(0, 9)))
        try:
            out = apply_word(w, s, config)
        except DomainViolation:
            continue
        m0, m1 = multisets(s), multisets(out)
        err = max(multiset_distance(m0[t], m1[t], relative=True) for t in m0)
        res.metric("word_error", err)
        res.record(err <= 1e-9, {"word": str(w), "error": err})
    paths = [(MODEL, circle_path(1.5 + 0.5j, 0.3, 64)), (MODEL, circle_path(0.5j, 0.2, 64))]
    for _ in range(4):
        pts = [(p.a, p.alpha) for p in (random_point(rng) for _ in range(3))]
        paths.append((HarmonicShadow.from_pairs({"t": pts}),
                      [complex(*rng.normal(size=2)) + 2.0 for _ in range(6)]))
    for sh, path in paths:
        try:
            tr = trace_path(sh, path, config)
        except DomainViolation:
            continue
        for s1, s2, step in zip(tr.samples, tr.samples[1:], tr.transitions):
            err = monodromy_step_error(s1, s2, step)
            res.metric("path_step_error", err)
            res.record(err <= 1e-9, {"lambda": [s2.lam.real, s2.lam.imag], "error": err})
    return res


def suite_cocycle(seed: int, config: Config = DEFAULT) -> SuiteResult:
    res = SuiteResult("cocycle")
    cover = build_cover(MODEL, 2.0, config=config)
    rep = cocycle_check(MODEL, cover, config)
    res.metrics["discs"] = float(len(cover.discs))
    res.metrics["pairs"] = float(rep.pairs)
    res.metrics["triples"] = float(rep.triples)
    res.record(rep.triples > 0, {"error": "no triple overlaps"})
    res.record(rep.passed, {"failures": rep.failures[:5]})
    return res


def suite_deligne(seed: int, config: Config = DEFAULT, n: int = 200) -> SuiteResult:
    res = SuiteResult("deligne")
    rng = _rng(seed, "deligne")
    for _ in range(n):
        r = int(rng.integers(1, 6))
        s = random_residue_shadow(rng, r, int(rng.integers(1, 4)))
        s = ResidueShadow(s.lam, {t: tuple(4 * v for v in vals) for t, vals in s.theta.items()})
        try:
            word, out = deligne_normalize(s, config)
            replay = apply_word(word, s, config)
        except DomainViolation as exc:
            res.record(False, {"error": str(exc)})
            continue
        xs = [(v / out.lam).real for vals in out.theta.values() for v in vals]
        ok = all(-1.0 < x <= 1e-12 for x in xs) and replay.close_to(out, 1e-9)
        res.record(ok, {"rank": r, "values": xs})
    return res


def suite_twistor(seed: int, config: Config = DEFAULT) -> SuiteResult:
    res = SuiteResult("twistor")
    for n0 in range(5):
        for n1 in range(5):
            for n2 in range(5):
                if n0 == n1 == n2 == 0:
                    continue
                P = WeightProfile(n0, n1, n2)
                gen = generating_coefficients(P, 6)
                for d in range(7):
                    res.record(sym_check(P, d).passed, {"profile": [n0, n1, n2], "d": d})
                    tab = weight_table(P, d).entries
                    series = {k: c for k, c in enumerate(gen[d]) if c}
                    res.record(tab == series, {"profile": [n0, n1, n2], "d": d})
                    res.record(sum(tab.values()) == math.comb(P.size + d - 1, d),
                               {"profile": [n0, n1, n2], "d": d})
    res.record(twistor_h0({0: 4}) == 4 and twistor_h0({1: 1}) == 2)
    res.record(filtration_product_check(WeightProfile(2, 2, 2), 5).passed)
    return res


def suite_glue(seed: int, config: Config = DEFAULT) -> SuiteResult:
    res = SuiteResult("glue")
    rng = _rng(seed, "glue")
    samples = [cmath.exp(2j * math.pi * (k + 0.25) / 8) for k in range(8)]
    # the rank-1 flat-section model singles out (a, alpha) -> (a, conj alpha)
    x = KmsPoint(-0.3, 0.2 + 0.7j)
    alternatives = {"identity": lambda y: y, "negate_level": lambda y: KmsPoint(-y.a, y.alpha.conjugate())}
    for lam in samples:
        ox, oc = rank1_oracle(x, lam, conjugate_point)
        err = max(abs(ox.monodromy.conjugate() - oc.monodromy), abs(ox.jump - oc.jump))
        res.metric("rank1_oracle_error", err)
        res.record(err <= 1e-9, {"lambda": [lam.real, lam.imag], "error": err})
    for name, alt in alternatives.items():
        errs = []
        for lam in samples:
            ox, oc = rank1_oracle(x, lam, alt)
            errs.append(max(abs(ox.monodromy.conjugate() - oc.monodromy), abs(ox.jump - oc.jump)))
        res.record(max(errs) > 1e-3, {"alternative": name, "error": max(errs)})
    shadows = [HarmonicShadow.from_pairs({"t": [(0.0, 0.0)]}),
               HarmonicShadow.from_pairs({"t": [(-0.4, 0.0)]}),
               HarmonicShadow.from_pairs({"t": [(random_point(rng).a, random_point(rng).alpha)]}),
               MODEL]
    for sh in shadows:
        for lam in samples:
            rep = glue_infinity(sh, lam, 1e-9, config)
            res.metric("monodromy_error", rep.monodromy_error)
            res.metric("jump_error", rep.jump_error)
            res.metric("harmonic_route_error", rep.harmonic_route_error)
            res.record(rep.passed, rep.to_json())
    return res


SUITES = {
    "flow": suite_flow,
    "groupoid": suite_groupoid,
    "injectivity": suite_injectivity,
    "betti": suite_betti,
    "walls": suite_walls,
    "monodromy": suite_monodromy,
    "cocycle": suite_cocycle,
    "deligne": suite_deligne,
    "twistor": suite_twistor,
    "glue": suite_glue,
}


def run_suites(name: str, seed: int, config: Config = DEFAULT) -> list[SuiteResult]:
    names = list(SUITES) if name == "all" else [name]
    return [SUITES[n](seed, config) for n in names]
