"""Monte Carlo sessions, sweeps and their aggregate statistics.

Seeds: session ``k`` of an experiment with base seed ``S`` runs the protocol
on ``PCG64(mix64(S, k))``; when the message is random its bits come from
``PCG64(mix64(mix64(S, k), 0))``.  Seeds depend on the session index only, so
every point of a sweep sees the same seeds.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..adversary import AttackKind, AttackStrategy, tracy_estimate
from ..protocol import Transcript, Verdict, run_session
from ..stats import SUPPORT
from .config import ExperimentConfig, SessionConfig, mix64
from .oracle import oracle_pair_distribution


@dataclass(frozen=True)
class SessionSummary:
    attack: str
    session_index: int
    seed: int
    verdict: str
    abort_reason: str
    rounds_used: int
    pairs_tested: int
    detection_round: int | None
    detection_pair: int | None
    n: int
    bits_delivered: int
    tracy_found: int
    tracy_estimate: float
    true_transmissions: int
    tracy_error: float
    pair_counts: tuple[int, ...]
    off_support_pairs: int
    last_p_value: float | None
    norm_violations: int
    max_channel_weight: float

    @property
    def aborted(self) -> bool:
        return self.verdict == Verdict.ABORTED.value


def summarize(tr: Transcript, attack: AttackStrategy, index: int, seed: int) -> SessionSummary:
    est = tracy_estimate(attack, tr.tracy_found)
    aborted = tr.verdict is Verdict.ABORTED
    return SessionSummary(
        attack=attack.label,
        session_index=index,
        seed=seed,
        verdict=tr.verdict.value,
        abort_reason=tr.abort_reason,
        rounds_used=tr.rounds_used,
        pairs_tested=tr.pairs_tested,
        detection_round=tr.abort_round if aborted else None,
        detection_pair=tr.abort_round // 2 if aborted and tr.abort_round else None,
        n=len(tr.message),
        bits_delivered=tr.bits_delivered,
        tracy_found=tr.tracy_found,
        tracy_estimate=est,
        true_transmissions=tr.rounds_used,
        tracy_error=est - tr.rounds_used if attack.kind is not AttackKind.NONE else 0.0,
        pair_counts=tuple(tr.pair_counts),
        off_support_pairs=tr.off_support_pairs,
        last_p_value=tr.last_test.p_value if tr.last_test else None,
        norm_violations=tr.norm_violations,
        max_channel_weight=tr.max_channel_weight,
    )


def session_config_for(cfg: ExperimentConfig, attack: AttackStrategy, seed: int) -> SessionConfig:
    base = replace(cfg.base, attack=attack, keep_rounds=False)
    if cfg.random_bits:
        bits = np.random.Generator(np.random.PCG64(mix64(seed, 0))).integers(
            0, 2, cfg.random_bits
        )
        base = replace(base, message=tuple(int(b) for b in bits))
    return base


def _run_one(args) -> SessionSummary:
    cfg, attack, k = args
    seed = mix64(cfg.seed, k)
    tr = run_session(session_config_for(cfg, attack, seed), seed)
    return summarize(tr, attack, k, seed)


@dataclass
class AttackAggregate:
    attack: AttackStrategy
    sessions: int
    aborted: int
    off_support_aborts: int
    frequency_aborts: int
    mean_detection_pair: float | None
    rounds_per_bit: float | None
    mean_tracy_error: float | None
    mean_abs_tracy_error: float | None
    norm_violations: int
    oracle_off_support: float
    oracle_exact: bool

    @property
    def abort_rate(self) -> float:
        return self.aborted / self.sessions

    @property
    def false_positive_rate(self) -> float | None:
        return self.abort_rate if self.attack.kind is AttackKind.NONE else None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summaries: list[SessionSummary] = field(default_factory=list)
    aggregates: list[AttackAggregate] = field(default_factory=list)

    def for_attack(self, label: str) -> list[SessionSummary]:
        return [s for s in self.summaries if s.attack == label]


def aggregate(attack: AttackStrategy, sums: list[SessionSummary]) -> AttackAggregate:
    aborted = [s for s in sums if s.aborted]
    bits = sum(s.bits_delivered for s in sums)
    rounds = sum(s.rounds_used for s in sums)
    orc = oracle_pair_distribution(attack)
    attacked = attack.kind is not AttackKind.NONE
    return AttackAggregate(
        attack=attack,
        sessions=len(sums),
        aborted=len(aborted),
        off_support_aborts=sum(s.abort_reason == "off_support" for s in aborted),
        frequency_aborts=sum(s.abort_reason == "frequency_deviation" for s in aborted),
        mean_detection_pair=(
            sum(s.detection_pair for s in aborted) / len(aborted) if aborted else None
        ),
        rounds_per_bit=rounds / bits if bits else None,
        mean_tracy_error=(sum(s.tracy_error for s in sums) / len(sums)) if attacked else None,
        mean_abs_tracy_error=(
            sum(abs(s.tracy_error) for s in sums) / len(sums) if attacked else None
        ),
        norm_violations=sum(s.norm_violations for s in sums),
        oracle_off_support=float(orc.off_support_mass),
        oracle_exact=orc.exact,
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """All sessions for every attack of the sweep, ordered by attack then index."""
    result = ExperimentResult(cfg)
    for attack in cfg.attacks():
        jobs = [(cfg, attack, k) for k in range(cfg.num_sessions)]
        if cfg.workers > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                sums = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
        else:
            sums = [_run_one(j) for j in jobs]
        sums.sort(key=lambda s: s.session_index)
        result.summaries.extend(sums)
        result.aggregates.append(aggregate(attack, sums))
    return result


def detection_curve(sums: list[SessionSummary], max_pairs: int | None = None) -> list[float]:
    """Fraction of sessions aborted by pair k, for k = 1..max_pairs."""
    if max_pairs is None:
        max_pairs = max((s.pairs_tested for s in sums), default=0)
    if not sums:
        return [0.0] * max_pairs
    hits = np.zeros(max_pairs + 1)
    for s in sums:
        if s.detection_pair is not None and s.detection_pair <= max_pairs:
            hits[s.detection_pair] += 1
    return list(np.cumsum(hits)[1:] / len(sums))


def oracle_curve(off_support: float, max_pairs: int) -> list[float]:
    """Chance that at least one of k attacked pairs is off the null support."""
    return [1 - (1 - off_support) ** k for k in range(1, max_pairs + 1)]


def within_pairs_rate(sums: list[SessionSummary], k: int) -> float:
    return sum(1 for s in sums if s.detection_pair is not None and s.detection_pair <= k) / len(sums)

