"""Pairing of detector records and Alice's goodness-of-fit test."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

PairRecord = tuple  # (C_{2j-1}, C_{2j}, D_{2j-1}, D_{2j})

SUPPORT: tuple[PairRecord, ...] = (
    (1, 1, 0, 0),
    (1, 0, 0, 0),
    (0, 1, 0, 0),
    (1, 0, 0, 1),
    (0, 1, 1, 0),
)
ALL_PAIRS: tuple[PairRecord, ...] = tuple(
    (c1, c2, d1, d2) for c1 in (0, 1) for c2 in (0, 1) for d1 in (0, 1) for d2 in (0, 1)
)
DOF = len(SUPPORT) - 1


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class NullDistribution:
    support: tuple[PairRecord, ...]
    probabilities: tuple[Fraction, ...]
    off_support_probability: Fraction = Fraction(0)

    def __post_init__(self):
        if sum(self.probabilities) + self.off_support_probability != 1:
            raise ValueError("null distribution does not sum to 1")

    def prob(self, pair: PairRecord) -> Fraction:
        pair = tuple(pair)
        if pair in self.support:
            return self.probabilities[self.support.index(pair)]
        return Fraction(0)

    def as_dict(self) -> dict[PairRecord, Fraction]:
        return {x: self.prob(x) for x in ALL_PAIRS}

    def floats(self) -> list[float]:
        return [float(p) for p in self.probabilities]


def exact_null() -> NullDistribution:
    return NullDistribution(
        SUPPORT, tuple(Fraction(k, 8) for k in (2, 2, 2, 1, 1))
    )


class Decision(Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class RejectReason(Enum):
    NONE = "none"
    OFF_SUPPORT = "off_support"
    FREQUENCY_DEVIATION = "frequency_deviation"


@dataclass(frozen=True)
class TestVerdict:
    __test__ = False  # not a pytest class

    decision: Decision
    statistic: float
    p_value: float
    reject_reason: RejectReason = RejectReason.NONE

    def __post_init__(self):
        if (self.decision is Decision.REJECT) != (self.reject_reason is not RejectReason.NONE):
            raise ValueError("Reject iff a reason is given")

    @property
    def rejected(self) -> bool:
        return self.decision is Decision.REJECT


def pair_of(first, second) -> PairRecord:
    """Pair tuple from two (C, D) detector readings."""
    return (first[0], second[0], first[1], second[1])


def group_pairs(rounds: Sequence) -> list[PairRecord]:
    """Non-overlapping consecutive pairs; a trailing odd round is left out.

    Accepts RoundOutcome objects (anything with ``.detector``) or raw (C, D)
    tuples.
    """
    cd = []
    for r in rounds:
        det = getattr(r, "detector", None)
        cd.append((det.c_fired, det.d_fired) if det is not None else tuple(r))
    return [pair_of(cd[k], cd[k + 1]) for k in range(0, len(cd) - 1, 2)]


def chi2_sf_4(x: float) -> float:
    """Survival function of chi-square with 4 degrees of freedom."""
    if x <= 0:
        return 1.0
    return math.exp(-x / 2) * (1 + x / 2)


def g_statistic(counts: Sequence[int], probs: Sequence[float]) -> float:
    n = sum(counts)
    g = 0.0
    for o, p in zip(counts, probs):
        if o > 0:
            g += o * math.log(o / (n * p))
    return max(2.0 * g, 0.0)


def support_counts(pairs: Iterable[PairRecord]) -> tuple[list[int], int]:
    """Counts per support cell and number of off-support pairs."""
    c = Counter(tuple(p) for p in pairs)
    counts = [c.get(x, 0) for x in SUPPORT]
    return counts, sum(c.values()) - sum(counts)


def verdict_from_counts(counts: Sequence[int], off_support: int, alpha: float) -> TestVerdict:
    """Decision from aggregated counts; see :func:`step6_test`."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if off_support:
        return TestVerdict(Decision.REJECT, math.inf, 0.0, RejectReason.OFF_SUPPORT)
    if sum(counts) == 0:
        raise InsufficientData("no pairs to test")
    g = g_statistic(counts, exact_null().floats())
    p = chi2_sf_4(g)
    if p < alpha:
        return TestVerdict(Decision.REJECT, g, p, RejectReason.FREQUENCY_DEVIATION)
    return TestVerdict(Decision.ACCEPT, g, p)


def step6_test(pairs: Sequence[PairRecord], alpha: float) -> TestVerdict:
    """Reject on any zero-probability pair, else G-test against the null table."""
    counts, off = support_counts(pairs)
    return verdict_from_counts(counts, off, alpha)


def empirical_frequencies(pairs: Iterable[PairRecord]) -> dict[PairRecord, float]:
    c = Counter(tuple(p) for p in pairs)
    n = sum(c.values())
    return {x: (c.get(x, 0) / n if n else 0.0) for x in ALL_PAIRS}


def total_variation(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)


class CheckpointPolicy(Enum):
    """How the per-checkpoint level is set across a session's repeated tests.

    ``spending`` gives the k-th checkpoint ``alpha * 6 / (pi^2 k^2)`` so the
    levels over an unbounded session sum to ``alpha``; ``uncorrected`` uses
    ``alpha`` every time.
    """

    SPENDING = "spending"
    UNCORRECTED = "uncorrected"

    def level(self, alpha: float, k: int) -> float:
        if k < 1:
            raise ValueError("checkpoints are numbered from 1")
        if self is CheckpointPolicy.UNCORRECTED:
            return alpha
        return alpha * 6.0 / (math.pi ** 2 * k * k)
