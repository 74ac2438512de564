"""Alice's and Bob's state machines and the round scheduler.

Each round draws four uniforms from the session generator, always in the
same order: outbound attack, Bob's coin, inbound attack or Bob's read, and
Alice's detectors.  Unused draws are discarded so the stream position depends
only on the round number.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .adversary import (
    AttackStrategy,
    TracyObservation,
    Transit,
    apply_attack,
    attack_family,
    channel_weight,
)
from .harness.config import SessionConfig
from .optics import (
    BobResult,
    DetectorEvent,
    absorb_at_bob,
    bob_read,
    interfere_and_detect,
    mirror,
    prepare_and_split,
)
from .qstate import ALGEBRA_TOL
from .stats import SUPPORT, TestVerdict, pair_of, verdict_from_counts

DRAWS_PER_ROUND = 4
NORM_BOUND = 0.5


class ProtocolError(RuntimeError):
    pass


class ProtocolComplete(ProtocolError):
    pass


@dataclass(frozen=True)
class AliceState:
    message: tuple[int, ...]
    i: int = 1  # 1-based index of the bit in flight
    a: int = 0  # rounds completed
    stored_flag: bool = False
    payload_check_enabled: bool = False

    @property
    def done(self) -> bool:
        return self.i > len(self.message)

    @property
    def current_bit(self) -> int:
        return self.message[self.i - 1]


@dataclass(frozen=True)
class BobState:
    b: bool = True
    r: bool = False
    received: tuple[int, ...] = ()


@dataclass(frozen=True)
class RoundOutcome:
    round_index: int  # value of Alice's counter a after the round (1-based)
    bit_index: int
    bit_sent: int
    mirrored: bool
    bob_result: BobResult
    detector: DetectorEvent
    tracy: tuple[TracyObservation, ...]
    bit_delivered: bool
    timestamp: float
    channel_weight: float
    payload_mismatch: bool = False

    @property
    def tracy_found(self) -> bool:
        return any(o.found_particle == "yes" for o in self.tracy)


class Verdict(Enum):
    COMPLETED = "Completed"
    ABORTED = "Aborted"
    INCOMPLETE = "Incomplete"  # pair budget exhausted first


@dataclass
class Transcript:
    message: tuple[int, ...]
    verdict: Verdict
    delivered_message: tuple[int, ...]
    rounds_used: int
    abort_round: int | None = None
    abort_reason: str = "none"
    last_test: TestVerdict | None = None
    tests_run: int = 0
    pair_counts: list[int] = field(default_factory=lambda: [0] * len(SUPPORT))
    off_support_pairs: int = 0
    tracy_found: int = 0
    norm_violations: int = 0
    max_channel_weight: float = 0.0
    rounds: list[RoundOutcome] = field(default_factory=list)

    @property
    def pairs_tested(self) -> int:
        return sum(self.pair_counts) + self.off_support_pairs

    @property
    def bits_delivered(self) -> int:
        return len(self.delivered_message)


def bob_decide(bob: BobState, rand: float) -> tuple[bool, BobState]:
    """Fresh coin on the first round of a pair, forced opposite choice on the second."""
    r = bool(rand < 0.5) if bob.b else bob.r
    return r, replace(bob, b=not bob.b, r=not r)


def run_round(
    alice: AliceState,
    bob: BobState,
    attack: AttackStrategy,
    rng: np.random.Generator,
    *,
    t1: float = 0.0,
    delta: float = 1.0,
    family=None,
) -> tuple[RoundOutcome, AliceState, BobState]:
    """One transmission of the current bit, from preparation to Alice's delivery check."""
    if alice.done:
        raise ProtocolComplete("every bit of the message has been delivered")
    if family is None:
        family = attack_family(attack)
    u_out, u_coin, u_mid, u_det = rng.random(DRAWS_PER_ROUND)
    a = alice.a + 1
    m = alice.current_bit
    timestamp = t1 + alice.a * delta

    s = prepare_and_split(m)
    weights = [channel_weight(s)]
    obs_out, s = apply_attack(attack, s, Transit.OUTBOUND, u_out, a, family)
    tracy = [obs_out]

    mirrored, bob = bob_decide(bob, u_coin)
    if mirrored:
        s = mirror(s)
        result = BobResult.MIRRORED
        # Tracy's own 'found' collapse is excluded from the bound.
        if obs_out.found_particle != "yes":
            weights.append(channel_weight(s))
        if attack.covers(Transit.INBOUND):
            obs_in, s = apply_attack(attack, s, Transit.INBOUND, u_mid, a, family)
            tracy.append(obs_in)
    else:
        result, s = bob_read(s, u_mid)
        if result.bit is not None:
            bob = replace(bob, received=bob.received + (result.bit,))
        s = absorb_at_bob(s)

    detector, s = interfere_and_detect(s, u_det)
    delivered = not detector.fired
    if delivered and result.bit is None:
        raise ProtocolError("silent detectors although Bob holds no bit")
    if delivered and result.bit != m:
        raise ProtocolError(f"Bob read {result.bit} but Alice sent {m}")
    mismatch = bool(
        alice.payload_check_enabled and detector.fired and detector.detected_bit != m
    )
    outcome = RoundOutcome(
        round_index=a,
        bit_index=alice.i,
        bit_sent=m,
        mirrored=mirrored,
        bob_result=result,
        detector=detector,
        tracy=tuple(tracy),
        bit_delivered=delivered,
        timestamp=timestamp,
        channel_weight=max(weights),
        payload_mismatch=mismatch,
    )
    alice = replace(alice, a=a, i=alice.i + 1 if delivered else alice.i)
    return outcome, alice, bob


def session_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def run_session(config: SessionConfig, seed: int) -> Transcript:
    """Run rounds until the message is through or the pair test rejects.

    Off-support pairs reject at the even round that completes them.  The
    frequency test runs at every even round once ``n_min`` pairs exist, at the
    level the checkpoint policy assigns.  Within a round the test comes before
    the delivery check, so an abort can coincide with the last bit arriving.
    """
    rng = session_rng(seed)
    family = attack_family(config.attack)
    alice = AliceState(config.message, payload_check_enabled=config.payload_check)
    bob = BobState()
    tr = Transcript(config.message, Verdict.COMPLETED, (), 0)
    pending = None
    checkpoint = 0
    while not alice.done:
        out, alice, bob = run_round(
            alice, bob, config.attack, rng, t1=config.t1, delta=config.delta, family=family
        )
        tr.rounds_used = alice.a
        if config.keep_rounds:
            tr.rounds.append(out)
        tr.tracy_found += out.tracy_found
        tr.max_channel_weight = max(tr.max_channel_weight, out.channel_weight)
        if out.channel_weight > NORM_BOUND + ALGEBRA_TOL:
            tr.norm_violations += 1

        if out.payload_mismatch:
            tr.verdict, tr.abort_round, tr.abort_reason = Verdict.ABORTED, alice.a, "payload"
            break
        cd = (out.detector.c_fired, out.detector.d_fired)
        if alice.a % 2 == 1:
            pending = cd
            continue
        pair = pair_of(pending, cd)
        if pair in SUPPORT:
            tr.pair_counts[SUPPORT.index(pair)] += 1
        else:
            tr.off_support_pairs += 1
        npairs = alice.a // 2
        verdict = None
        if tr.off_support_pairs:
            verdict = verdict_from_counts(tr.pair_counts, tr.off_support_pairs, config.alpha)
        elif npairs >= config.n_min:
            checkpoint += 1
            level = config.policy.level(config.alpha, checkpoint)
            verdict = verdict_from_counts(tr.pair_counts, 0, level)
        if verdict is not None:
            tr.tests_run += 1
            tr.last_test = verdict
            if verdict.rejected:
                tr.verdict = Verdict.ABORTED
                tr.abort_round = alice.a
                tr.abort_reason = verdict.reject_reason.value
                break
        if config.max_pairs is not None and npairs >= config.max_pairs and not alice.done:
            tr.verdict = Verdict.INCOMPLETE
            break
    tr.delivered_message = bob.received
    if tr.verdict is Verdict.COMPLETED and tr.delivered_message != config.message:
        raise ProtocolError("completed session delivered the wrong message")
    return tr


def simulate_pairs(
    attack: AttackStrategy, n_pairs: int, seed: int, *, message_bit: int = 0
) -> list[tuple]:
    """Free-running pair records with no test and no abort.

    Alice keeps sending the same bit forever; the detector statistics do not
    depend on which bit is sent or retransmitted.
    """
    rng = session_rng(seed)
    family = attack_family(attack)
    alice = AliceState((message_bit,))
    bob = BobState()
    out = []
    for _ in range(n_pairs):
        cds = []
        for _ in range(2):
            r, alice, bob = run_round(alice, bob, attack, rng, family=family)
            # reset the bit pointer so the session never runs out of message
            alice = replace(alice, i=1)
            cds.append((r.detector.c_fired, r.detector.d_fired))
        out.append(pair_of(*cds))
    return out
