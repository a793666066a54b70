"""Hecke groupoid words acting on residual-eigenvalue shadows.

A shadow is a value of lambda, an ordered r-tuple of residual eigenvalues at
each puncture and an integer degree.  The generators act by

    H(t):    (th_1, ..., th_r) -> (th_r + lam, th_1, ..., th_{r-1}),  degree - 1
    T(t,i):  swap entries i and i+1 (defined only where they differ)
    U(t):    subtract lam from every entry,                          degree + r

Words are written left to right and applied right to left, so ``U(t) H(t)``
means "apply H first".  Every word acts affinely: slot i is moved to position
sigma(i) and shifted by m_i * lambda.  :class:`NormalForm` records that action
together with the inequalities under which all intermediate T-factors are
defined.
"""
from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .config import DEFAULT, Config
from .errors import DomainViolation, InputError, NotNormalizable

# --------------------------------------------------------------------------
# shadows


@dataclass(frozen=True)
class ResidueShadow:
    lam: complex
    theta: Mapping[str, tuple[complex, ...]]
    degree: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        theta = {str(t): tuple(complex(v) for v in vals)
                 for t, vals in dict(self.theta).items()}
        lengths = {len(v) for v in theta.values()}
        if len(lengths) > 1:
            raise InputError(f"puncture tuples have different lengths {lengths}")
        for t, vals in theta.items():
            if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in vals):
                raise InputError(f"non-finite residual eigenvalue at {t!r}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "degree", int(self.degree))

    @property
    def rank(self) -> int:
        return len(next(iter(self.theta.values()))) if self.theta else 0

    @property
    def punctures(self) -> list[str]:
        return list(self.theta)

    def replace_theta(self, label, values, degree_change=0) -> "ResidueShadow":
        theta = dict(self.theta)
        theta[label] = tuple(values)
        return ResidueShadow(self.lam, theta, self.degree + degree_change)

    def close_to(self, other: "ResidueShadow", eps: float = DEFAULT.eps_eq) -> bool:
        if self.degree != other.degree or abs(self.lam - other.lam) > eps:
            return False
        if list(self.theta) != list(other.theta):
            return False
        return all(abs(u - v) <= eps
                   for t in self.theta
                   for u, v in zip(self.theta[t], other.theta[t]))

    def key(self, eps: float = DEFAULT.eps_eq):
        """Hashable key for deduplication on an eps-sized grid."""
        def q(z):
            return (round(z.real / eps), round(z.imag / eps))
        return (q(self.lam), self.degree,
                tuple((t, tuple(q(v) for v in vals)) for t, vals in self.theta.items()))


# --------------------------------------------------------------------------
# generators and words


@dataclass(frozen=True)
class Generator:
    kind: str
    puncture: str
    index: int | None = None  # 1-based, T only

    def __post_init__(self):
        if self.kind not in ("H", "T", "U"):
            raise InputError(f"unknown generator kind {self.kind!r}")
        if self.kind == "T":
            if self.index is None or self.index < 1:
                raise InputError("T generator needs an index >= 1")
        elif self.index is not None:
            raise InputError(f"{self.kind} generator takes no index")

    def __str__(self):
        if self.kind == "T":
            return f"T({self.puncture},{self.index})"
        return f"{self.kind}({self.puncture})"


@dataclass(frozen=True)
class Letter:
    gen: Generator
    inverse: bool = False

    def inverted(self) -> "Letter":
        if self.gen.kind == "T":
            return self
        return Letter(self.gen, not self.inverse)


def H(t):
    return Letter(Generator("H", t))


def T(t, i):
    return Letter(Generator("T", t, i))


def U(t):
    return Letter(Generator("U", t))


_FACTOR = re.compile(
    r"\s*(?P<kind>[HTU])\(\s*(?P<t>[^,()\s]+)\s*(?:,\s*(?P<i>\d+)\s*)?\)"
    r"(?:\^(?P<exp>-?\d+))?\s*")


@dataclass(frozen=True)
class Word:
    """A sequence of letters; ``factors[-1]`` is applied first."""

    factors: tuple[Letter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def __len__(self):
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __mul__(self, other: "Word") -> "Word":
        # (self * other) applies other first
        return Word(self.factors + other.factors)

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return self.inverse() ** (-n)
        return Word(self.factors * n)

    def inverse(self) -> "Word":
        return Word(tuple(f.inverted() for f in reversed(self.factors)))

    def application_order(self) -> list[Letter]:
        return list(reversed(self.factors))

    @classmethod
    def of(cls, *letters: Letter) -> "Word":
        return cls(tuple(letters))

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Parse strings such as ``"U(t1) H(t1)^3 T(t2,1)^-1"``."""
        factors: list[Letter] = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _FACTOR.match(text, pos)
            if not m:
                raise InputError(f"cannot parse word at column {pos + 1}: {text[pos:]!r}")
            idx = int(m["i"]) if m["i"] is not None else None
            letter = Letter(Generator(m["kind"], m["t"], idx))
            exp = int(m["exp"]) if m["exp"] is not None else 1
            if exp < 0:
                letter, exp = letter.inverted(), -exp
            factors.extend([letter] * exp)
            pos = m.end()
        return cls(tuple(factors))

    def __repr__(self):
        return f"Word({str(self)!r})"

    def __str__(self):
        parts = []
        i = 0
        fs = self.factors
        while i < len(fs):
            j = i
            while j < len(fs) and fs[j] == fs[i]:
                j += 1
            n = j - i
            exp = -n if fs[i].inverse else n
            parts.append(str(fs[i].gen) + ("" if exp == 1 else f"^{exp}"))
            i = j
        return " ".join(parts)


# --------------------------------------------------------------------------
# pointwise action


def _check_distinct(theta, i, eps, what):
    if abs(theta[i - 1] - theta[i]) <= eps:
        raise DomainViolation(
            f"{what}: entries {i} and {i + 1} coincide ({theta[i - 1]:.6g})")


def apply_generator(g: Generator | Letter, s: ResidueShadow,
                    config: Config = DEFAULT) -> ResidueShadow:
    inverse = False
    if isinstance(g, Letter):
        g, inverse = g.gen, g.inverse
    if g.puncture not in s.theta:
        raise InputError(f"unknown puncture {g.puncture!r}")
    th = list(s.theta[g.puncture])
    r = len(th)
    lam = s.lam
    if g.kind == "H":
        if not inverse:
            return s.replace_theta(g.puncture, [th[-1] + lam] + th[:-1], -1)
        return s.replace_theta(g.puncture, th[1:] + [th[0] - lam], +1)
    if g.kind == "U":
        sign = 1 if inverse else -1
        return s.replace_theta(g.puncture, [v + sign * lam for v in th],
                               -r if inverse else r)
    i = g.index
    if i >= r:
        raise InputError(f"T index {i} out of range for rank {r}")
    _check_distinct(th, i, config.eps_eq, str(g))
    th[i - 1], th[i] = th[i], th[i - 1]
    return s.replace_theta(g.puncture, th)


def apply_word(w: Word, s: ResidueShadow, config: Config = DEFAULT) -> ResidueShadow:
    n = len(w.factors)
    for pos, letter in enumerate(reversed(w.factors)):
        try:
            s = apply_generator(letter, s, config)
        except DomainViolation as exc:
            index = n - 1 - pos
            raise DomainViolation(f"factor {index} ({letter.gen}): {exc}", index) from None
    return s


def words_agree_at(w1: Word, w2: Word, s: ResidueShadow,
                   config: Config = DEFAULT) -> bool:
    return apply_word(w1, s, config).close_to(apply_word(w2, s, config), config.eps_eq)


# --------------------------------------------------------------------------
# normal forms


@dataclass(frozen=True, order=True)
class DomainConstraint:
    """theta_{t,i} - theta_{t,j} != c * lambda, with 1-based i < j."""

    puncture: str
    i: int
    j: int
    c: int

    def holds_at(self, s: ResidueShadow, eps: float = DEFAULT.eps_eq) -> bool:
        th = s.theta[self.puncture]
        return abs(th[self.i - 1] - th[self.j - 1] - self.c * s.lam) > eps


@dataclass(frozen=True)
class AffineAction:
    sigma: tuple[int, ...]  # slot k (0-based) lands at position sigma[k]
    m: tuple[int, ...]

    @classmethod
    def identity(cls, r: int) -> "AffineAction":
        return cls(tuple(range(r)), (0,) * r)

    @property
    def degree(self) -> int:
        return -sum(self.m)

    def is_identity(self) -> bool:
        return self.sigma == tuple(range(len(self.sigma))) and not any(self.m)

    def then(self, other: "AffineAction") -> "AffineAction":
        """The action of ``other`` after ``self``."""
        sigma = tuple(other.sigma[p] for p in self.sigma)
        m = tuple(self.m[k] + other.m[self.sigma[k]] for k in range(len(self.m)))
        return AffineAction(sigma, m)

    def inverse(self) -> "AffineAction":
        r = len(self.sigma)
        sigma = [0] * r
        m = [0] * r
        for k, p in enumerate(self.sigma):
            sigma[p] = k
            m[p] = -self.m[k]
        return AffineAction(tuple(sigma), tuple(m))

    def act(self, theta: Sequence[complex], lam: complex) -> tuple[complex, ...]:
        out = [0j] * len(theta)
        for k, v in enumerate(theta):
            out[self.sigma[k]] = v + self.m[k] * lam
        return tuple(out)


@dataclass(frozen=True)
class NormalForm:
    actions: Mapping[str, AffineAction]
    degree: int = 0
    domain: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "actions", dict(self.actions))
        object.__setattr__(self, "domain", frozenset(self.domain))

    @classmethod
    def identity(cls, rank: int, punctures: Iterable[str]) -> "NormalForm":
        return cls({t: AffineAction.identity(rank) for t in punctures}, 0, frozenset())

    def element_key(self):
        """Equality of groupoid elements ignores the domain of definition."""
        return (tuple(sorted((t, a.sigma, a.m) for t, a in self.actions.items())),
                self.degree)

    def same_element(self, other: "NormalForm") -> bool:
        return self.element_key() == other.element_key()

    def is_identity(self) -> bool:
        return self.degree == 0 and all(a.is_identity() for a in self.actions.values())

    def degree_at(self, t: str) -> int:
        return self.actions[t].degree

    def defined_at(self, s: ResidueShadow, eps: float = DEFAULT.eps_eq) -> bool:
        return all(c.holds_at(s, eps) for c in self.domain)

    def violated_at(self, s: ResidueShadow, eps: float = DEFAULT.eps_eq):
        return sorted(c for c in self.domain if not c.holds_at(s, eps))

    def act(self, s: ResidueShadow) -> ResidueShadow:
        theta = {t: self.actions[t].act(vals, s.lam) if t in self.actions else vals
                 for t, vals in s.theta.items()}
        return ResidueShadow(s.lam, theta, s.degree + self.degree)

    def then(self, other: "NormalForm") -> "NormalForm":
        """Composite element: ``other`` after ``self`` (domains not pulled back)."""
        actions = {}
        for t in set(self.actions) | set(other.actions):
            a = self.actions.get(t)
            b = other.actions.get(t)
            actions[t] = b if a is None else (a if b is None else a.then(b))
        return NormalForm(actions, self.degree + other.degree)

    def to_json(self) -> dict:
        out = {}
        for t, a in self.actions.items():
            out[t] = {"sigma": [p + 1 for p in a.sigma], "m": list(a.m)}
        out["degree"] = self.degree
        out["domain"] = [[c.puncture, c.i, c.j, c.c] for c in sorted(self.domain)]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "NormalForm":
        actions = {t: AffineAction(tuple(p - 1 for p in v["sigma"]), tuple(v["m"]))
                   for t, v in data.items() if t not in ("degree", "domain")}
        domain = frozenset(DomainConstraint(str(t), int(i), int(j), int(c))
                           for t, i, j, c in data.get("domain", []))
        return cls(actions, int(data.get("degree", 0)), domain)


def _letter_action(letter: Letter, r: int) -> AffineAction:
    g = letter.gen
    if g.kind == "H":
        if not letter.inverse:
            sigma = tuple((p + 1) % r for p in range(r))
            m = tuple(1 if p == r - 1 else 0 for p in range(r))
        else:
            sigma = tuple((p - 1) % r for p in range(r))
            m = tuple(-1 if p == 0 else 0 for p in range(r))
        return AffineAction(sigma, m)
    if g.kind == "U":
        return AffineAction(tuple(range(r)), ((1 if letter.inverse else -1),) * r)
    i = g.index
    if i >= r:
        raise InputError(f"T index {i} out of range for rank {r}")
    sigma = list(range(r))
    sigma[i - 1], sigma[i] = i, i - 1
    return AffineAction(tuple(sigma), (0,) * r)


def normal_form(w: Word, rank: int, punctures: Iterable[str]) -> NormalForm:
    """Compose the affine generator actions of ``w`` symbolically.

    Each T-factor contributes the constraint that the two entries it swaps
    are distinct, pulled back through the factors applied before it.
    """
    actions = {t: AffineAction.identity(rank) for t in punctures}
    degree = 0
    domain = set()
    for letter in w.application_order():
        t = letter.gen.puncture
        if t not in actions:
            raise InputError(f"word mentions unknown puncture {t!r}")
        cur = actions[t]
        if letter.gen.kind == "T":
            i = letter.gen.index
            if i >= rank:
                raise InputError(f"T index {i} out of range for rank {rank}")
            inv = cur.inverse().sigma  # position -> slot
            a, b = inv[i - 1], inv[i]
            c = cur.m[b] - cur.m[a]
            if a < b:
                domain.add(DomainConstraint(t, a + 1, b + 1, c))
            else:
                domain.add(DomainConstraint(t, b + 1, a + 1, -c))
        elif letter.gen.kind == "H":
            degree += 1 if letter.inverse else -1
        else:
            degree += -rank if letter.inverse else rank
        actions[t] = cur.then(_letter_action(letter, rank))
    return NormalForm(actions, degree, frozenset(domain))


def degree_count(w: Word, rank: int) -> int:
    """-(#H) + r (#U), inverses counted negatively."""
    d = 0
    for f in w:
        sign = -1 if f.inverse else 1
        if f.gen.kind == "H":
            d -= sign
        elif f.gen.kind == "U":
            d += sign * rank
    return d


# --------------------------------------------------------------------------
# realizing affine actions by words


def shift_gadget(t: str, k: int, r: int) -> Word:
    """Word shifting slot k (1-based) by +lambda and fixing every other slot.

    Bubble slot k to the last position, rotate it to the front with H, then
    bubble it back: T(k-1)...T(1) H T(r-1)...T(k).
    """
    back = [T(t, i) for i in range(k - 1, 0, -1)]
    forward = [T(t, i) for i in range(r - 1, k - 1, -1)]
    return Word(tuple(back + [H(t)] + forward))


def adjacent_swaps(sigma: Sequence[int]) -> list[int]:
    """Bubble-sort positions (0-based p swaps p, p+1), in application order,
    that carry slot k to position sigma[k]."""
    arr = list(range(len(sigma)))  # arr[pos] = slot at pos
    swaps = []
    n = len(arr)
    for end in range(n - 1, 0, -1):
        for p in range(end):
            if sigma[arr[p]] > sigma[arr[p + 1]]:
                arr[p], arr[p + 1] = arr[p + 1], arr[p]
                swaps.append(p)
    return swaps


def realize(action: AffineAction, t: str) -> Word:
    """A word on puncture ``t`` whose normal form has the given action."""
    r = len(action.sigma)
    word = Word()
    for k, mk in enumerate(action.m, start=1):
        if mk:
            word = (shift_gadget(t, k, r) ** mk) * word
    for p in adjacent_swaps(action.sigma):
        word = Word.of(T(t, p + 1)) * word
    return word


def realize_normal_form(actions: Mapping[str, AffineAction]) -> Word:
    word = Word()
    for t, a in actions.items():
        word = realize(a, t) * word
    return word


# --------------------------------------------------------------------------
# Deligne normalization


def _drop_idle_swaps(w: Word, s: ResidueShadow, config: Config) -> Word:
    """Remove T-factors that would meet equal entries.

    Exchanging equal values leaves the tuple unchanged, so the shortened word
    produces the same shadow at every step and is defined at ``s``.
    """
    kept = []
    for letter in w.application_order():
        g = letter.gen
        if g.kind == "T":
            th = s.theta[g.puncture]
            if abs(th[g.index - 1] - th[g.index]) <= config.eps_eq:
                continue
        s = apply_generator(letter, s, config)
        kept.append(letter)
    return Word(tuple(reversed(kept)))


def deligne_normalize(s: ResidueShadow, config: Config = DEFAULT):
    """Move every Re(theta/lambda) into (-1, 0] with an explicit groupoid word.

    Integer shifts shared by all slots of a puncture use H^r / U; the rest use
    single-slot shift gadgets.  Returns ``(word, normalized_shadow)``.
    """
    if s.lam == 0:
        raise NotNormalizable("lambda = 0: the window Re(theta/lambda) is undefined")
    r = s.rank
    word = Word()
    for t, vals in s.theta.items():
        n = [-math.ceil((v / s.lam).real) for v in vals]
        common = min(n) if min(n) > 0 else (max(n) if max(n) < 0 else 0)
        if common > 0:
            word = Word.of(H(t)) ** (r * common) * word
        elif common < 0:
            word = Word.of(U(t)) ** (-common) * word
        for k, nk in enumerate(n, start=1):
            rest = nk - common
            if rest:
                word = shift_gadget(t, k, r) ** rest * word
    word = _drop_idle_swaps(word, s, config)
    out = apply_word(word, s, config)
    for t, vals in out.theta.items():
        for v in vals:
            x = (v / out.lam).real
            if not (-1.0 < x <= 0.0) and abs(x) > 1e-12 and abs(x + 1) > 1e-12:
                raise NotNormalizable(f"slot at {t!r} ended at Re(theta/lambda) = {x}")
    return word, out


# --------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class OrbitEntry:
    shadow: ResidueShadow
    word: Word
    normal_form: NormalForm


def default_generators(punctures: Sequence[str], rank: int,
                       inverses: bool = False) -> list[Letter]:
    gens = []
    for t in punctures:
        gens.append(H(t))
        gens += [T(t, i) for i in range(1, rank)]
        gens.append(U(t))
        if inverses:
            gens += [H(t).inverted(), U(t).inverted()]
    return gens


def orbit(s: ResidueShadow, max_word_length: int,
          generators: Sequence[Letter] | None = None,
          config: Config = DEFAULT) -> list[OrbitEntry]:
    """Breadth-first enumeration of shadows reachable by in-domain words."""
    if max_word_length < 0:
        raise InputError("max_word_length must be >= 0")
    if generators is None:
        generators = default_generators(s.punctures, s.rank)
    eps = config.eps_eq
    nf0 = NormalForm.identity(s.rank, s.punctures)
    entries = [OrbitEntry(s, Word(), nf0)]
    seen = {s.key(eps)}
    frontier = deque([(s, Word(), 0)])
    while frontier:
        cur, w, depth = frontier.popleft()
        if depth == max_word_length:
            continue
        for g in generators:
            try:
                nxt = apply_generator(g, cur, config)
            except DomainViolation:
                continue
            key = nxt.key(eps)
            if key in seen:
                continue
            seen.add(key)
            w2 = Word.of(g) * w
            entries.append(OrbitEntry(nxt, w2, normal_form(w2, s.rank, s.punctures)))
            frontier.append((nxt, w2, depth + 1))
    return entries
