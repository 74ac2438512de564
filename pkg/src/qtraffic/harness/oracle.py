"""Exact probability tree for one pair of rounds.

This is an independent route to the detector statistics: it re-derives every
device from its definition on a dictionary-of-amplitudes state and never calls
the numeric simulator.  Amplitudes live in the field generated by square
roots of rationals (:class:`Surd`), so every branch weight is exact: a
:class:`~fractions.Fraction` for the projective attacks, a Surd once a weak
measurement mixes sqrt(eta) into an interference term.  Parameters whose
square roots are too large to factor fall back to floating point, flagged in
the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from ..adversary import AttackKind, AttackStrategy, TransitPolicy
from ..stats import ALL_PAIRS, SUPPORT

_FACTOR_LIMIT = 10 ** 12
FLOAT_ERROR_BOUND = 1e-13


def _squarefree_split(n: int) -> tuple[int, int]:
    """``n = k^2 * r`` with ``r`` squarefree; returns ``(k, r)``."""
    if n <= 0:
        raise ValueError("need a positive integer")
    if n > _FACTOR_LIMIT:
        raise OverflowError(f"{n} too large to factor")
    k, r, p = 1, 1, 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        k *= p ** (e // 2)
        if e % 2:
            r *= p
        p += 1 if p == 2 else 2
    return k, r * n


class Surd:
    """Finite sum of ``coef * sqrt(r)`` over squarefree integers ``r``."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[int, Fraction] = {r: c for r, c in (terms or {}).items() if c}

    @classmethod
    def rational(cls, x) -> "Surd":
        return cls({1: Fraction(x)})

    @classmethod
    def sqrt(cls, x) -> "Surd":
        x = Fraction(x)
        if x < 0:
            raise ValueError("square root of a negative number")
        if x == 0:
            return cls()
        # sqrt(p/q) = sqrt(p*q) / q
        k, r = _squarefree_split(x.numerator * x.denominator)
        return cls({r: Fraction(k, x.denominator)})

    def __add__(self, other):
        if not isinstance(other, Surd):
            other = Surd.rational(other)
        out = dict(self.terms)
        for r, c in other.terms.items():
            out[r] = out.get(r, 0) + c
        return Surd(out)

    def __neg__(self):
        return Surd({r: -c for r, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Surd):
            other = Surd.rational(other)
        out: dict[int, Fraction] = {}
        for r1, c1 in self.terms.items():
            for r2, c2 in other.terms.items():
                g = math.gcd(r1, r2)
                r = (r1 // g) * (r2 // g)
                out[r] = out.get(r, 0) + c1 * c2 * g
        return Surd(out)

    __rmul__ = __mul__
    __radd__ = __add__

    def __eq__(self, other):
        if not isinstance(other, Surd):
            try:
                other = Surd.rational(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_rational(self) -> bool:
        return not (set(self.terms) - {1})

    def simplify(self):
        """Fraction when rational, else the Surd itself."""
        return self.as_fraction() if self.is_rational() else self

    def as_fraction(self) -> Fraction:
        if set(self.terms) - {1}:
            raise ArithmeticError(f"{self!r} is not rational")
        return self.terms.get(1, Fraction(0))

    def __float__(self):
        return float(sum(float(c) * math.sqrt(r) for r, c in self.terms.items()))

    def __repr__(self):
        return " + ".join(f"{c}*sqrt({r})" for r, c in sorted(self.terms.items())) or "0"


class _ExactField:
    exact = True

    def sqrt(self, x):
        return Surd.sqrt(x)

    def const(self, x):
        return Surd.rational(x)

    def weight(self, amp) -> Surd:
        # real amplitudes only; squares may still be irrational (weak attacks)
        return amp * amp


class _FloatField:
    exact = False

    def sqrt(self, x):
        return math.sqrt(float(x))

    def const(self, x):
        return float(x)

    def weight(self, amp) -> float:
        return amp * amp


def to_fraction(x) -> Fraction:
    """Exact reading of a parameter; floats are read by their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


# State: dict label -> amplitude, labels ("vac",), ("a", m), ("c", m), ("b", m).
VAC = ("vac",)


def _keep(state, pred, scale=None):
    out = {}
    for lab, amp in state.items():
        if pred(lab):
            out[lab] = amp if scale is None else amp * scale
    return out


def _on_channel(lab):
    return lab[0] == "c"


def _kraus_branches(strategy, fld):
    """Labelled state maps for one measured transit."""
    kind = strategy.kind
    if kind is AttackKind.PRESENCE:
        return [
            ("found", lambda s: _keep(s, _on_channel)),
            ("not_found", lambda s: _keep(s, lambda l: not _on_channel(l))),
        ]
    if kind is AttackKind.INTERCEPT:
        return [
            ("c0", lambda s: _keep(s, lambda l: l == ("c", 0))),
            ("c1", lambda s: _keep(s, lambda l: l == ("c", 1))),
            ("rest", lambda s: _keep(s, lambda l: not _on_channel(l))),
        ]
    if kind is AttackKind.WEAK:
        eta = to_fraction(strategy.eta)
        y, n = fld.sqrt(eta), fld.sqrt(1 - eta)

        def k_no(s):
            out = _keep(s, lambda l: not _on_channel(l))
            out.update(_keep(s, _on_channel, n))
            return out

        return [("yes", lambda s: _keep(s, _on_channel, y)), ("no", k_no)]
    return []


def _transit(strategy, covered, branches, fld):
    """Expand (prob, state) branches over Tracy's action on one transit."""
    if not covered or strategy.kind is AttackKind.NONE:
        return branches
    if strategy.kind is AttackKind.WEAK:
        rate = Fraction(1)
    else:
        rate = to_fraction(strategy.q)
    out = []
    for p, s in branches:
        if rate < 1:
            out.append((p * (1 - rate), s))
        if rate > 0:
            for _, k in _kraus_branches(strategy, fld):
                out.append((p * rate, k(s)))
    return out


def _norm2(state, fld):
    return sum((fld.weight(a) for a in state.values()), fld.const(0))


def round_distribution(strategy: AttackStrategy, mirrored: bool, bit: int = 0, fld=None):
    """Exact law of one round's (C, D) reading."""
    fld = fld or _ExactField()
    h = fld.sqrt(Fraction(1, 2))
    state = {("a", bit): h, ("c", bit): h}
    branches = [(fld.const(1), state)]
    branches = _transit(strategy, True, branches, fld)
    dist: dict[tuple[int, int], object] = {}

    def add(cd, w):
        dist[cd] = dist.get(cd, 0) + w

    if mirrored:
        both = strategy.transit_policy is TransitPolicy.BOTH
        branches = _transit(strategy, both, branches, fld)
    else:
        moved = []
        for p, s in branches:
            s = {(("b", lab[1]) if _on_channel(lab) else lab): amp for lab, amp in s.items()}
            for m in (0, 1):
                # Bob holds the particle; Alice's interferometer stays dark.
                w = _norm2(_keep(s, lambda l, m=m: l == ("b", m)), fld)
                if w:
                    add((0, 0), p * w)
            moved.append((p, _keep(s, lambda l: l[0] != "b")))
        branches = moved

    for p, s in branches:
        for b in (0, 1):
            stored = s.get(("a", b), fld.const(0))
            back = s.get(("c", b), fld.const(0))
            wc = fld.weight((stored + back) * h)
            wd = fld.weight((stored - back) * h)
            if wc:
                add((1, 0), p * wc)
            if wd:
                add((0, 1), p * wd)
        if VAC in s:
            w = fld.weight(s[VAC])
            if w:
                add((0, 0), p * w)
    if fld.exact:
        dist = {cd: w.simplify() for cd, w in dist.items()}
    return dist


@dataclass
class ExactDistribution:
    attack: AttackStrategy
    probs: dict
    exact: bool = True
    error_bound: float = 0.0
    bits: tuple[int, int] = (0, 0)
    round_laws: dict = field(default_factory=dict)

    def prob(self, pair) -> object:
        return self.probs.get(tuple(pair), Fraction(0) if self.exact else 0.0)

    def total(self):
        return _simplify(sum(self.probs.values(), Fraction(0)))

    @property
    def off_support_mass(self):
        return _simplify(sum((p for x, p in self.probs.items() if x not in SUPPORT), Fraction(0)))

    def conditional_on_support(self) -> list[float]:
        inside = [float(self.prob(x)) for x in SUPPORT]
        tot = sum(inside)
        return [p / tot for p in inside]

    def floats(self) -> dict:
        return {x: float(self.prob(x)) for x in ALL_PAIRS}


def _simplify(x):
    return x.simplify() if isinstance(x, Surd) else x


def _field_for(strategy: AttackStrategy):
    try:
        if strategy.kind is AttackKind.WEAK:
            eta = to_fraction(strategy.eta)
            Surd.sqrt(eta)
            Surd.sqrt(1 - eta)
        if strategy.kind in (AttackKind.PRESENCE, AttackKind.INTERCEPT):
            to_fraction(strategy.q)
        return _ExactField()
    except OverflowError:
        return _FloatField()


def oracle_pair_distribution(attack: AttackStrategy, bits=(0, 0)) -> ExactDistribution:
    """Enumerate Bob's coin, Tracy's outcomes, Bob's read and both detectors."""
    fld = _field_for(attack)
    laws = {
        (mir, b): round_distribution(attack, mir, b, fld)
        for mir in (True, False)
        for b in set(bits)
    }
    half = Fraction(1, 2) if fld.exact else 0.5
    probs: dict = {}
    for first_mirrored in (True, False):
        law1 = laws[(first_mirrored, bits[0])]
        law2 = laws[(not first_mirrored, bits[1])]
        for (cd1, p1), (cd2, p2) in product(law1.items(), law2.items()):
            pair = (cd1[0], cd2[0], cd1[1], cd2[1])
            probs[pair] = probs.get(pair, 0) + half * p1 * p2
    probs = {x: _simplify(p) for x, p in probs.items()}
    dist = ExactDistribution(
        attack, probs, fld.exact, 0.0 if fld.exact else FLOAT_ERROR_BOUND, tuple(bits), laws
    )
    tot = dist.total()
    if (fld.exact and tot != 1) or (not fld.exact and abs(tot - 1) > FLOAT_ERROR_BOUND):
        raise ArithmeticError(f"pair probabilities sum to {tot}")
    return dist


def read_delivery_probability(attack: AttackStrategy):
    """Probability that a read round leaves Alice's detectors silent."""
    return round_distribution(attack, False).get((0, 0), Fraction(0))


def oracle_rounds_per_bit(attack: AttackStrategy):
    """(mean rounds per bit from a pair boundary, long-run rounds per bit).

    A bit can only arrive in a read round, with probability ``p``.  From a pair
    boundary, E = 1/2 [p + (1-p)(2+E)] + 1/2 [2p + (1-p)(2+E)], i.e.
    E = 2/p - 1/2.  Each pair holds one read round, so in a long session bits
    arrive at rate p per pair, i.e. 2/p rounds per bit.
    """
    mirror_silent = round_distribution(attack, True).get((0, 0), 0)
    if mirror_silent:
        raise ArithmeticError("a mirrored round cannot deliver a bit")
    p = read_delivery_probability(attack)
    if not p:
        return math.inf, math.inf
    if isinstance(p, Surd):
        p = float(p)
    return 2 / p - Fraction(1, 2), 2 / p
