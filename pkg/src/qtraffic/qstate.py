"""State vectors and measurements on the 7-dimensional protocol space.

Basis order (fixed, used everywhere as an index):

    0  vacuum
    1  (alice, 0)    2  (alice, 1)
    3  (channel, 0)  4  (channel, 1)
    5  (bob, 0)      6  (bob, 1)

Global phase is never fixed; compare states with :func:`equal_up_to_phase`.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

DIM = 7
ALGEBRA_TOL = 1e-9
ZERO_TOL = 1e-12


class Location(Enum):
    ALICE = "alice"
    CHANNEL = "channel"
    BOB = "bob"


_LOC_OFFSET = {Location.ALICE: 1, Location.CHANNEL: 3, Location.BOB: 5}


class QStateError(ValueError):
    pass


class ZeroVector(QStateError):
    pass


class NotHermitian(QStateError):
    pass


class InvalidFamily(QStateError):
    pass


@dataclass(frozen=True)
class BasisState:
    """One of the seven basis vectors; ``location=None`` is the vacuum."""

    location: Location | None = None
    bit: int | None = None

    def __post_init__(self):
        if (self.location is None) != (self.bit is None):
            raise ValueError("vacuum has neither location nor bit")
        if self.bit not in (None, 0, 1):
            raise ValueError(f"bit must be 0 or 1, got {self.bit!r}")

    @property
    def index(self) -> int:
        if self.location is None:
            return 0
        return _LOC_OFFSET[self.location] + self.bit

    @classmethod
    def from_index(cls, k: int) -> "BasisState":
        return BASIS[k]

    def __str__(self):
        if self.location is None:
            return "|0>"
        return f"|{self.location.value[0]},{self.bit}>"


VACUUM = BasisState()
BASIS: tuple[BasisState, ...] = (VACUUM,) + tuple(
    BasisState(loc, b) for loc in Location for b in (0, 1)
)


def index(location: Location, bit: int) -> int:
    return _LOC_OFFSET[location] + bit


def subspace_indices(location: Location) -> tuple[int, int]:
    off = _LOC_OFFSET[location]
    return (off, off + 1)


class StateVector:
    """Immutable unit vector of complex amplitudes over :data:`BASIS`."""

    __slots__ = ("_amp",)

    def __init__(self, amp, *, check: bool = True):
        a = np.array(amp, dtype=complex).reshape(DIM)
        if check:
            if not np.all(np.isfinite(a)):
                raise QStateError("amplitudes must be finite")
            n = np.vdot(a, a).real
            if abs(n - 1.0) > ALGEBRA_TOL:
                raise QStateError(f"state not normalized: |s|^2 = {n!r}")
        a.flags.writeable = False
        self._amp = a

    @property
    def amp(self) -> np.ndarray:
        return self._amp

    @classmethod
    def basis(cls, b: BasisState | int) -> "StateVector":
        k = b if isinstance(b, int) else b.index
        a = np.zeros(DIM, dtype=complex)
        a[k] = 1.0
        return cls(a, check=False)

    @classmethod
    def vacuum(cls) -> "StateVector":
        return cls.basis(0)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self._amp, self._amp).real))

    def __getitem__(self, b: BasisState | int) -> complex:
        k = b if isinstance(b, int) else b.index
        return complex(self._amp[k])

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return bool(np.allclose(self._amp, other._amp, atol=ALGEBRA_TOL, rtol=0))

    def __hash__(self):
        return hash(tuple(np.round(self._amp, 9)))

    def __repr__(self):
        terms = [
            f"({v.real:+.4g}{v.imag:+.4g}j){BASIS[k]}"
            for k, v in enumerate(self._amp)
            if abs(v) > ZERO_TOL
        ]
        return "StateVector(" + " ".join(terms) + ")"


Amplitude = complex
Operator = np.ndarray


def normalize(s) -> StateVector:
    """Rescale to unit norm. Accepts a StateVector or a raw amplitude array."""
    a = s.amp if isinstance(s, StateVector) else np.asarray(s, dtype=complex)
    n = np.sqrt(np.vdot(a, a).real)
    if not np.isfinite(n) or n <= ZERO_TOL:
        raise ZeroVector(f"cannot normalize vector of norm {n!r}")
    return StateVector(a / n, check=False)


def inner_product(x: StateVector, y: StateVector) -> Amplitude:
    """<x|y>, conjugate-linear in ``x``."""
    return complex(np.vdot(x.amp, y.amp))


def is_hermitian(op: np.ndarray, tol: float = ALGEBRA_TOL) -> bool:
    return float(np.abs(op - op.conj().T).max()) <= tol


def expectation(s: StateVector, op: np.ndarray) -> float:
    """<s|op|s> for a Hermitian ``op``."""
    if not is_hermitian(op):
        raise NotHermitian("expectation requires a Hermitian operator")
    return float(np.vdot(s.amp, op @ s.amp).real)


def projector(indices: Sequence[int]) -> np.ndarray:
    """Diagonal projector onto the span of the given basis indices."""
    p = np.zeros((DIM, DIM), dtype=complex)
    for k in indices:
        p[k, k] = 1.0
    return p


def location_projector(location: Location) -> np.ndarray:
    return projector(subspace_indices(location))


def equal_up_to_phase(x: StateVector, y: StateVector, tol: float = ALGEBRA_TOL) -> bool:
    return abs(abs(inner_product(x, y)) - 1.0) < tol


def _min_eig(op: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((op + op.conj().T) / 2).min())


class MeasurementFamily:
    """A POVM: labelled positive operators summing to the identity.

    With ``projective=True`` the elements must also be idempotent and
    mutually orthogonal. Post-measurement states are the normalized
    projections ``a_i s``; for a non-projective POVM use a KrausFamily if the
    update rule matters.
    """

    def __init__(self, elements, *, projective: bool = False, check: bool = True):
        self.labels: tuple[str, ...] = tuple(str(lab) for lab, _ in elements)
        ops = [np.array(op, dtype=complex).reshape(DIM, DIM) for _, op in elements]
        for op in ops:
            op.flags.writeable = False
        self.operators: tuple[np.ndarray, ...] = tuple(ops)
        self.projective = projective
        if len(set(self.labels)) != len(self.labels):
            raise InvalidFamily(f"duplicate labels in {self.labels}")
        if check:
            self.validate()

    @property
    def elements(self):
        return list(zip(self.labels, self.operators))

    def validate(self) -> None:
        for lab, op in self.elements:
            if not is_hermitian(op):
                raise InvalidFamily(f"element {lab!r} is not Hermitian")
            if _min_eig(op) < -ALGEBRA_TOL:
                raise InvalidFamily(f"element {lab!r} is not positive semidefinite")
        total = sum(self.operators)
        if not np.allclose(total, np.eye(DIM), atol=ALGEBRA_TOL, rtol=0):
            raise InvalidFamily("elements do not sum to the identity")
        if self.projective:
            for i, (lab, p) in enumerate(self.elements):
                if not np.allclose(p @ p, p, atol=ALGEBRA_TOL, rtol=0):
                    raise InvalidFamily(f"element {lab!r} is not idempotent")
                for q in self.operators[i + 1:]:
                    if not np.allclose(p @ q, 0, atol=ALGEBRA_TOL):
                        raise InvalidFamily("projective elements are not orthogonal")

    def probabilities(self, s: StateVector) -> np.ndarray:
        return np.array([np.vdot(s.amp, op @ s.amp).real for op in self.operators])

    def update(self, k: int, s: StateVector) -> np.ndarray:
        return self.operators[k] @ s.amp

    def __len__(self):
        return len(self.labels)


class KrausFamily:
    """Labelled Kraus operators with sum K^dagger K = identity."""

    def __init__(self, elements, *, check: bool = True):
        self.labels: tuple[str, ...] = tuple(str(lab) for lab, _ in elements)
        ops = [np.array(k, dtype=complex).reshape(DIM, DIM) for _, k in elements]
        for op in ops:
            op.flags.writeable = False
        self.operators: tuple[np.ndarray, ...] = tuple(ops)
        if len(set(self.labels)) != len(self.labels):
            raise InvalidFamily(f"duplicate labels in {self.labels}")
        if check:
            self.validate()

    @property
    def elements(self):
        return list(zip(self.labels, self.operators))

    def effects(self) -> list[np.ndarray]:
        return [k.conj().T @ k for k in self.operators]

    def validate(self) -> None:
        total = sum(self.effects())
        if not np.allclose(total, np.eye(DIM), atol=ALGEBRA_TOL, rtol=0):
            raise InvalidFamily("Kraus operators are not trace preserving")

    def as_povm(self) -> MeasurementFamily:
        return MeasurementFamily(list(zip(self.labels, self.effects())))

    def probabilities(self, s: StateVector) -> np.ndarray:
        out = np.empty(len(self.operators))
        for i, k in enumerate(self.operators):
            v = k @ s.amp
            out[i] = np.vdot(v, v).real
        return out

    def update(self, k: int, s: StateVector) -> np.ndarray:
        return self.operators[k] @ s.amp

    def __len__(self):
        return len(self.labels)


Family = Union[MeasurementFamily, KrausFamily]


def select_interval(probs: Sequence[float], rand: float) -> int:
    """Index of the consecutive interval of [0, 1) containing ``rand``.

    Intervals are laid out in element order with widths ``probs``. Zero-width
    intervals are never selected; a draw landing past the accumulated total
    (rounding) goes to the last element with nonzero weight.
    """
    if not 0.0 <= rand < 1.0:
        raise ValueError(f"rand must lie in [0, 1), got {rand!r}")
    acc = 0.0
    last = None
    for k, p in enumerate(probs):
        if p <= ZERO_TOL:
            continue
        acc += p
        last = k
        if rand < acc:
            return k
    if last is None:
        raise ZeroVector("all outcome probabilities vanish")
    return last


def measure(s: StateVector, fam: Family, rand: float) -> tuple[str, StateVector]:
    """Sample an outcome by the Born rule from a single uniform draw and collapse."""
    probs = fam.probabilities(s)
    if abs(probs.sum() - 1.0) > ALGEBRA_TOL:
        raise ZeroVector(f"outcome probabilities sum to {probs.sum()!r}")
    k = select_interval(probs, rand)
    return fam.labels[k], normalize(fam.update(k, s))
