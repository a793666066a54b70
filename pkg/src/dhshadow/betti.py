"""Filtered local systems and the Betti groupoid as flag surgery.

A filtered local system is a representation of the punctured-surface group
(matrices for a_1, b_1, ..., a_g, b_g and one loop gamma_t per puncture) with,
at every puncture, a complete flag invariant under gamma_t.  Flags are stored
as r x r matrices whose first j columns span the j-th subspace; they are kept
orthonormal, which does not change the flag.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .config import DEFAULT, Config
from .errors import DomainViolation, FlagNotInvariant, InputError


def _orthonormal_flag(F: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(F)
    # fix the phase so that diag(r) > 0; the flag is unchanged either way
    d = np.diag(r)
    phase = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return q * phase


@dataclass(frozen=True)
class FilteredLocalSystem:
    rank: int
    punctures: tuple[str, ...]
    gamma: tuple[np.ndarray, ...]
    flags: tuple[np.ndarray, ...]
    a: tuple[np.ndarray, ...] = ()
    b: tuple[np.ndarray, ...] = ()
    framing: np.ndarray | None = None

    def __post_init__(self):
        r = self.rank
        cast = lambda ms: tuple(np.array(m, dtype=complex) for m in ms)  # noqa: E731
        object.__setattr__(self, "punctures", tuple(str(t) for t in self.punctures))
        object.__setattr__(self, "gamma", cast(self.gamma))
        object.__setattr__(self, "a", cast(self.a))
        object.__setattr__(self, "b", cast(self.b))
        flags = tuple(_orthonormal_flag(np.array(F, dtype=complex)) for F in self.flags)
        object.__setattr__(self, "flags", flags)
        framing = np.eye(r, dtype=complex) if self.framing is None else np.array(self.framing, dtype=complex)
        object.__setattr__(self, "framing", framing)
        if len(set(self.punctures)) != len(self.punctures):
            raise InputError("puncture labels are not unique")
        if len(self.gamma) != len(self.punctures) or len(self.flags) != len(self.punctures):
            raise InputError("need one loop matrix and one flag per puncture")
        if len(self.a) != len(self.b):
            raise InputError("a and b generator lists differ in length")
        for m in self.gamma + self.a + self.b + self.flags + (self.framing,):
            if m.shape != (r, r):
                raise InputError(f"matrix of shape {m.shape}, expected ({r}, {r})")
            if not np.all(np.isfinite(m)):
                raise InputError("non-finite matrix entry")
        for m in self.gamma + self.a + self.b + (self.framing,):
            if np.linalg.matrix_rank(m) < r:
                raise InputError("generator or framing matrix is not invertible")

    @property
    def genus(self) -> int:
        return len(self.a)

    def loop(self, t: str) -> np.ndarray:
        return self.gamma[self.punctures.index(t)]

    def flag(self, t: str) -> np.ndarray:
        return self.flags[self.punctures.index(t)]

    def with_flags(self, flags: Mapping[str, np.ndarray]) -> "FilteredLocalSystem":
        new = tuple(flags.get(t, F) for t, F in zip(self.punctures, self.flags))
        return replace(self, flags=new)

    def generators(self):
        return self.a + self.b + self.gamma

    def surface_relation_defect(self) -> float:
        prod = np.eye(self.rank, dtype=complex)
        for a, b in zip(self.a, self.b):
            prod = prod @ a @ b @ np.linalg.inv(a) @ np.linalg.inv(b)
        for g in self.gamma:
            prod = prod @ g
        return float(np.max(np.abs(prod - np.eye(self.rank))))

    def invariance_defect(self, t: str) -> float:
        B = np.linalg.solve(self.flag(t), self.loop(t) @ self.flag(t))
        scale = max(1.0, float(np.max(np.abs(B))))
        return float(np.max(np.abs(np.tril(B, -1)), initial=0.0)) / scale

    def validate(self, config: Config = DEFAULT) -> list[str]:
        issues = []
        defect = self.surface_relation_defect()
        if defect > config.eps_rel:
            issues.append(f"surface relation violated by {defect:.3g}")
        for t in self.punctures:
            d = self.invariance_defect(t)
            if d > config.eps_eq:
                issues.append(f"flag at {t!r} is not invariant (defect {d:.3g})")
        return issues


EigenvalueVector = dict  # puncture -> tuple of complex, one per graded line
MultiPermutation = dict  # puncture -> tuple of 0-based images


def _triangular_form(L: FilteredLocalSystem, t: str, config: Config) -> np.ndarray:
    F = L.flag(t)
    B = np.linalg.solve(F, L.loop(t) @ F)
    scale = max(1.0, float(np.max(np.abs(B))))
    lower = float(np.max(np.abs(np.tril(B, -1)), initial=0.0))
    if lower / scale > config.eps_eq:
        raise FlagNotInvariant(f"flag at {t!r} is not invariant (defect {lower / scale:.3g})")
    return B


def eigenvalue_map(L: FilteredLocalSystem, config: Config = DEFAULT) -> EigenvalueVector:
    """Eigenvalue of gamma_t on each graded line V_i / V_{i-1}."""
    return {t: tuple(complex(z) for z in np.diag(_triangular_form(L, t, config)))
            for t in L.punctures}


def in_domain(sigma: Mapping[str, Sequence[int]], A: EigenvalueVector,
              eps: float = DEFAULT.eps_eq) -> bool:
    for t, perm in sigma.items():
        alpha = A[t]
        for i, j in itertools.combinations(range(len(perm)), 2):
            if perm[i] > perm[j] and abs(alpha[i] - alpha[j]) <= eps:
                return False
    return True


def adjacent_decomposition(perm: Sequence[int], strategy: str = "bubble",
                           rng: np.random.Generator | None = None) -> list[int]:
    """Adjacent transpositions (0-based position p swaps p, p+1), in
    application order, moving the line in slot k to position perm[k].

    Every swap exchanges a pair inverted by ``perm``.  ``strategy`` is
    ``"bubble"`` (left-to-right passes), ``"reverse"`` (right-to-left passes)
    or ``"random"`` (any inverted adjacent pair, drawn from ``rng``).
    """
    n = len(perm)
    arr = list(range(n))
    swaps = []

    def inverted(p):
        return perm[arr[p]] > perm[arr[p + 1]]

    if strategy == "random":
        rng = rng or np.random.default_rng(0)
        while True:
            cand = [p for p in range(n - 1) if inverted(p)]
            if not cand:
                break
            p = cand[int(rng.integers(len(cand)))]
            arr[p], arr[p + 1] = arr[p + 1], arr[p]
            swaps.append(p)
        return swaps
    if strategy not in ("bubble", "reverse"):
        raise InputError(f"unknown decomposition strategy {strategy!r}")
    changed = True
    while changed:
        changed = False
        order = range(n - 1) if strategy == "bubble" else range(n - 2, -1, -1)
        for p in order:
            if inverted(p):
                arr[p], arr[p + 1] = arr[p + 1], arr[p]
                swaps.append(p)
                changed = True
    return swaps


def swap_adjacent(F: np.ndarray, gamma: np.ndarray, p: int,
                  eps: float = DEFAULT.eps_eq) -> np.ndarray:
    """Exchange graded lines p and p+1 of an invariant flag.

    Inside V_{p+2}/V_p the operator is [[x, beta], [0, y]]; the new p-th line
    is the y-eigenline, which exists because x != y.
    """
    B = np.linalg.solve(F, gamma @ F)
    x, y, beta = B[p, p], B[p + 1, p + 1], B[p, p + 1]
    if abs(x - y) <= eps:
        raise DomainViolation(
            f"lines {p + 1} and {p + 2} share the eigenvalue {complex(x):.6g}")
    G = F.copy()
    G[:, p] = (beta / (y - x)) * F[:, p] + F[:, p + 1]
    G[:, p + 1] = F[:, p]
    return _orthonormal_flag(G)


def flag_surgery(sigma: Mapping[str, Sequence[int]], L: FilteredLocalSystem,
                 strategy: str = "bubble", rng=None,
                 config: Config = DEFAULT) -> FilteredLocalSystem:
    flags = {}
    for t, perm in sigma.items():
        if tuple(perm) == tuple(range(L.rank)):
            continue
        F, g = L.flag(t), L.loop(t)
        _triangular_form(L, t, config)
        for p in adjacent_decomposition(perm, strategy, rng):
            F = swap_adjacent(F, g, p, config.eps_eq)
        flags[t] = F
    return L.with_flags(flags) if flags else L


def flag_distance(F: np.ndarray, G: np.ndarray) -> float:
    """Largest principal angle between corresponding subspaces of two flags."""
    r = F.shape[1]
    worst = 0.0
    for j in range(1, r):
        ang = sla.subspace_angles(F[:, :j], G[:, :j])
        worst = max(worst, float(np.max(ang)))
    return worst


def system_flag_distance(L1: FilteredLocalSystem, L2: FilteredLocalSystem) -> float:
    return max((flag_distance(L1.flag(t), L2.flag(t)) for t in L1.punctures), default=0.0)


def compose_perms(tau: Mapping[str, Sequence[int]],
                  sigma: Mapping[str, Sequence[int]]) -> dict:
    """(tau sigma)(i) = tau(sigma(i)); missing punctures act as the identity."""
    out = {}
    for t in set(tau) | set(sigma):
        s = sigma.get(t)
        u = tau.get(t)
        if s is None:
            out[t] = tuple(u)
        elif u is None:
            out[t] = tuple(s)
        else:
            out[t] = tuple(u[s[i]] for i in range(len(s)))
    return out


@dataclass
class ComposeReport:
    passed: bool
    max_angle: float


def compose_check(tau, sigma, L: FilteredLocalSystem,
                  config: Config = DEFAULT) -> ComposeReport:
    A = eigenvalue_map(L, config)
    if not in_domain(sigma, A, config.eps_eq):
        raise DomainViolation("sigma is not defined at this point")
    L1 = flag_surgery(sigma, L, config=config)
    if not in_domain(tau, eigenvalue_map(L1, config), config.eps_eq):
        raise DomainViolation("tau is not defined after sigma")
    two_step = flag_surgery(tau, L1, config=config)
    direct = flag_surgery(compose_perms(tau, sigma), L, config=config)
    angle = system_flag_distance(two_step, direct)
    return ComposeReport(angle <= config.eps_flag, angle)


def commutant_dimension(L: FilteredLocalSystem, rtol: float = 1e-9) -> int:
    """Dimension of the flag-preserving endomorphisms commuting with every generator.

    Unknown X is vectorised column-major.  X g = g X gives (I (x) g - g^T (x) I)
    vec X = 0; flag preservation asks (F^-1 X F)_{pq} = 0 for p > q.
    """
    r = L.rank
    I = np.eye(r)
    rows = [np.kron(I, g) - np.kron(g.T, I) for g in L.generators()]
    for F in L.flags:
        Finv = np.linalg.inv(F)
        for p in range(r):
            for q in range(p):
                # sum_{a,b} Finv[p,a] X[a,b] F[b,q]; vec index a + b*r
                rows.append(np.kron(F[:, q], Finv[p, :])[None, :])
    if not rows:
        return r * r
    M = np.vstack(rows)
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > rtol * max(1.0, s[0])))
    return r * r - rank


# --------------------------------------------------------------------------
# random instances


def random_triangularizable(rng: np.random.Generator, eigenvalues) -> tuple[np.ndarray, np.ndarray]:
    """(gamma, flag basis) with gamma = P U P^-1 and U upper triangular."""
    r = len(eigenvalues)
    Umat = np.triu(rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)), 1)
    Umat += np.diag(eigenvalues)
    P = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)) + 2 * np.eye(r)
    return P @ Umat @ np.linalg.inv(P), P


def random_eigenvalues(rng: np.random.Generator, r: int, min_gap: float = 0.3):
    while True:
        vals = np.exp(rng.uniform(-0.5, 0.5, r) + 1j * rng.uniform(-np.pi, np.pi, r))
        gaps = [abs(u - v) for u, v in itertools.combinations(vals, 2)]
        if not gaps or min(gaps) > min_gap / r:
            return vals


def random_local_system(rng: np.random.Generator, rank: int, punctures: int = 2,
                        eigenvalues=None) -> FilteredLocalSystem:
    """Genus-0 system: gamma_1 ... gamma_k = 1, the last loop closing the relation."""
    if punctures < 1:
        raise InputError("need at least one puncture")
    gammas, flags = [], []
    for _ in range(punctures - 1):
        ev = random_eigenvalues(rng, rank) if eigenvalues is None else eigenvalues
        g, F = random_triangularizable(rng, ev)
        gammas.append(g)
        flags.append(F)
    prod = np.eye(rank, dtype=complex)
    for g in gammas:
        prod = prod @ g
    last = np.linalg.inv(prod)
    _, Z = sla.schur(last, output="complex")
    gammas.append(last)
    flags.append(Z)
    labels = tuple(f"t{i + 1}" for i in range(punctures))
    return FilteredLocalSystem(rank, labels, tuple(gammas), tuple(flags))


def random_permutation(rng: np.random.Generator, r: int) -> tuple[int, ...]:
    return tuple(int(x) for x in rng.permutation(r))
