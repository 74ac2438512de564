"""Beam splitters, Bob's mirror/read device and Alice's detectors C and D."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .qstate import (
    ALGEBRA_TOL,
    DIM,
    Location,
    MeasurementFamily,
    QStateError,
    StateVector,
    ZERO_TOL,
    measure,
    normalize,
    projector,
    select_interval,
    subspace_indices,
)

_H = 1 / np.sqrt(2)
_A0, _A1 = subspace_indices(Location.ALICE)
_C0, _C1 = subspace_indices(Location.CHANNEL)
_B0, _B1 = subspace_indices(Location.BOB)


class InvalidState(QStateError):
    pass


class PreconditionViolated(QStateError):
    pass


class BobResult(Enum):
    BIT0 = "bit0"
    BIT1 = "bit1"
    EPSILON = "epsilon"
    MIRRORED = "mirrored"

    @property
    def bit(self) -> int | None:
        return {BobResult.BIT0: 0, BobResult.BIT1: 1}.get(self)


@dataclass(frozen=True)
class DetectorEvent:
    c_fired: int = 0
    d_fired: int = 0
    detected_bit: int | None = None

    def __post_init__(self):
        if self.c_fired + self.d_fired > 1:
            raise ValueError("a single particle fires at most one detector")
        if (self.detected_bit is None) != (self.c_fired + self.d_fired == 0):
            raise ValueError("detected_bit is set exactly when a detector fires")

    @property
    def fired(self) -> bool:
        return self.c_fired + self.d_fired > 0


NO_FIRE = DetectorEvent()


def prepare_and_split(m: int) -> StateVector:
    """Single particle carrying bit ``m`` split evenly between lab and channel."""
    if m not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {m!r}")
    a = np.zeros(DIM, dtype=complex)
    a[_A0 + m] = _H
    a[_C0 + m] = _H
    return StateVector(a, check=False)


def mirror(s: StateVector) -> StateVector:
    # Reflection at Bob's mirror leaves the state untouched.
    return s


def transfer_channel_to_bob(s: StateVector) -> StateVector:
    a = s.amp.copy()
    if abs(a[_B0]) > ZERO_TOL or abs(a[_B1]) > ZERO_TOL:
        raise InvalidState("Bob's lab already holds a wave package")
    a[_B0:_B1 + 1] = a[_C0:_C1 + 1]
    a[_C0:_C1 + 1] = 0
    return StateVector(a, check=False)


def _bob_family() -> MeasurementFamily:
    q0 = projector([_B0])
    q1 = projector([_B1])
    qe = np.eye(DIM) - q0 - q1
    return MeasurementFamily([("0", q0), ("1", q1), ("epsilon", qe)], projective=True)


BOB_READ = _bob_family()
_BOB_LABELS = {"0": BobResult.BIT0, "1": BobResult.BIT1, "epsilon": BobResult.EPSILON}


def bob_read(s: StateVector, rand: float) -> tuple[BobResult, StateVector]:
    """Pull the channel package into Bob's lab and measure {Q0, Q1, Q_eps}."""
    label, post = measure(transfer_channel_to_bob(s), BOB_READ, rand)
    return _BOB_LABELS[label], post


# Outcome order for the single draw in interfere_and_detect.
DETECTOR_OUTCOMES = (
    DetectorEvent(1, 0, 0),
    DetectorEvent(1, 0, 1),
    DetectorEvent(0, 1, 0),
    DetectorEvent(0, 1, 1),
    NO_FIRE,
)


def detector_probabilities(s: StateVector) -> np.ndarray:
    """Probabilities of (C0, C1, D0, D1, none) after recombining at B2.

    B2 sends the stored component to (C, D) as (+1, +1)/sqrt2 and the returning
    channel component as (+1, -1)/sqrt2, so an undisturbed package interferes
    constructively at C.
    """
    a = s.amp.tolist()
    if abs(a[_B0]) > ZERO_TOL or abs(a[_B1]) > ZERO_TOL:
        raise PreconditionViolated("interference requires an empty Bob lab")
    out = []
    for sign in (1, -1):
        for b in (0, 1):
            amp = (a[_A0 + b] + sign * a[_C0 + b]) * _H
            out.append(amp.real * amp.real + amp.imag * amp.imag)
    out.append(abs(a[0]) ** 2)
    return np.array(out)


def interfere_and_detect(s: StateVector, rand: float) -> tuple[DetectorEvent, StateVector]:
    probs = detector_probabilities(s)
    if abs(probs.sum() - 1.0) > ALGEBRA_TOL:
        raise InvalidState(f"detector probabilities sum to {probs.sum()!r}")
    k = select_interval(probs, rand)
    # The particle is absorbed by a detector or was never here; either way
    # nothing is left in the interferometer.
    return DETECTOR_OUTCOMES[k], StateVector.vacuum()


def absorb_at_bob(s: StateVector) -> StateVector:
    """State seen by Alice once Bob's detector has swallowed his component."""
    a = s.amp.copy()
    a[_B0:_B1 + 1] = 0
    if np.vdot(a, a).real <= ZERO_TOL:
        return StateVector.vacuum()
    return normalize(a)
