"""Tracy's attacks as measurements that act only outside Alice's lab.

The 7-dimensional space is treated as ``R (x) C``: R holds Alice's and Bob's
labs, C is the channel with basis (channel-vacuum, channel-bit0,
channel-bit1).  A local operator is ``1 (x) b`` for a 3x3 ``b`` on C,
compressed to the sector of at most one particle.  On states where the
channel is empty (vacuum, Alice's lab, Bob's lab) it therefore acts as the
scalar ``b[0, 0]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .qstate import (
    ALGEBRA_TOL,
    DIM,
    KrausFamily,
    Location,
    MeasurementFamily,
    QStateError,
    StateVector,
    expectation,
    location_projector,
    measure,
    subspace_indices,
)

# Positions of (channel-vacuum, c0, c1) inside the 7-dim basis.  The
# channel-vacuum row stands for the vacuum state itself.
_CHANNEL_FACTOR = (0,) + subspace_indices(Location.CHANNEL)
_EMPTY_CHANNEL = (0,) + subspace_indices(Location.ALICE) + subspace_indices(Location.BOB)

P_FOUND = location_projector(Location.CHANNEL)
P_NOT_FOUND = np.eye(DIM) - P_FOUND
P_FOUND.flags.writeable = False
P_NOT_FOUND.flags.writeable = False


class NotLocal(QStateError):
    pass


class AttackKind(Enum):
    NONE = "none"
    PRESENCE = "presence"
    WEAK = "weak"
    INTERCEPT = "intercept"


class TransitPolicy(Enum):
    OUTBOUND_ONLY = "outbound"
    BOTH = "both"


class Transit(Enum):
    OUTBOUND = "outbound"
    INBOUND = "inbound"


@dataclass(frozen=True)
class AttackStrategy:
    kind: AttackKind = AttackKind.NONE
    q: float = 1.0
    eta: float = 1.0
    transit_policy: TransitPolicy = TransitPolicy.OUTBOUND_ONLY

    def __post_init__(self):
        for name in ("q", "eta"):
            v = getattr(self, name)
            if not 0.0 <= float(v) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @classmethod
    def none(cls) -> "AttackStrategy":
        return cls(AttackKind.NONE)

    @classmethod
    def presence(cls, q=1.0, transit_policy=TransitPolicy.OUTBOUND_ONLY) -> "AttackStrategy":
        return cls(AttackKind.PRESENCE, q=q, transit_policy=transit_policy)

    @classmethod
    def weak(cls, eta=1.0, transit_policy=TransitPolicy.OUTBOUND_ONLY) -> "AttackStrategy":
        return cls(AttackKind.WEAK, eta=eta, transit_policy=transit_policy)

    @classmethod
    def intercept(cls, q=1.0, transit_policy=TransitPolicy.OUTBOUND_ONLY) -> "AttackStrategy":
        return cls(AttackKind.INTERCEPT, q=q, transit_policy=transit_policy)

    def covers(self, transit: Transit) -> bool:
        if self.kind is AttackKind.NONE:
            return False
        return transit is Transit.OUTBOUND or self.transit_policy is TransitPolicy.BOTH

    @property
    def rate(self) -> float:
        """Probability that a covered transit is measured at all."""
        if self.kind in (AttackKind.PRESENCE, AttackKind.INTERCEPT):
            return float(self.q)
        return 1.0 if self.kind is AttackKind.WEAK else 0.0

    @property
    def label(self) -> str:
        if self.kind is AttackKind.NONE:
            return "none"
        if self.kind is AttackKind.WEAK:
            par = f"eta={float(self.eta):.6g}"
        else:
            par = f"q={float(self.q):.6g}"
        return f"{self.kind.value}({par},{self.transit_policy.value})"


@dataclass(frozen=True)
class TracyObservation:
    round_index: int
    outcome_label: str
    found_particle: str  # "yes", "no" or "not_measured"

    def __post_init__(self):
        if self.found_particle not in ("yes", "no", "not_measured"):
            raise ValueError(f"bad found_particle {self.found_particle!r}")
        if (self.found_particle == "not_measured") != (self.outcome_label == ""):
            raise ValueError("unmeasured transits carry no outcome label")


def not_measured(round_index: int = 0) -> TracyObservation:
    return TracyObservation(round_index, "", "not_measured")


class LocalOperator:
    """``1 (x) b`` for a 3x3 operator ``b`` on the channel factor."""

    def __init__(self, b):
        self.b = np.array(b, dtype=complex).reshape(3, 3)
        self.b.flags.writeable = False
        self.lifted = lift(self.b)

    @classmethod
    def from_lifted(cls, op) -> "LocalOperator":
        b = channel_block(op)
        if not np.allclose(lift(b), op, atol=ALGEBRA_TOL, rtol=0):
            raise NotLocal("operator couples Alice's or Bob's lab to the channel")
        return cls(b)


def lift(b) -> np.ndarray:
    b = np.asarray(b, dtype=complex)
    out = np.zeros((DIM, DIM), dtype=complex)
    out[np.ix_(_CHANNEL_FACTOR, _CHANNEL_FACTOR)] = b
    for k in _EMPTY_CHANNEL[1:]:
        out[k, k] = b[0, 0]
    return out


def channel_block(op) -> np.ndarray:
    return np.asarray(op, dtype=complex)[np.ix_(_CHANNEL_FACTOR, _CHANNEL_FACTOR)]


def is_local(op) -> bool:
    return bool(np.allclose(lift(channel_block(op)), op, atol=ALGEBRA_TOL, rtol=0))


def local_family(bs, labels=None, *, projective: bool = False) -> MeasurementFamily:
    """POVM ``(1 (x) b_i)`` from channel-factor operators ``b_i``."""
    labels = labels or [str(i) for i in range(len(bs))]
    return MeasurementFamily(
        [(lab, lift(b)) for lab, b in zip(labels, bs)], projective=projective
    )


PRESENCE_FAMILY = MeasurementFamily(
    [("found", P_FOUND), ("not_found", P_NOT_FOUND)], projective=True
)

_C0, _C1 = subspace_indices(Location.CHANNEL)


def _intercept_family() -> MeasurementFamily:
    p0 = np.zeros((DIM, DIM), dtype=complex)
    p0[_C0, _C0] = 1
    p1 = np.zeros((DIM, DIM), dtype=complex)
    p1[_C1, _C1] = 1
    return MeasurementFamily(
        [("c0", p0), ("c1", p1), ("rest", np.eye(DIM) - p0 - p1)], projective=True
    )


INTERCEPT_FAMILY = _intercept_family()


def weak_family(eta: float) -> KrausFamily:
    """Unambiguous weak presence test: a 'yes' certifies the particle."""
    k_yes = np.sqrt(eta) * P_FOUND
    k_no = np.sqrt(1.0 - eta) * P_FOUND + P_NOT_FOUND
    return KrausFamily([("yes", k_yes), ("no", k_no)])


_FOUND = {"found": "yes", "not_found": "no", "yes": "yes", "no": "no",
          "c0": "yes", "c1": "yes", "rest": "no"}


def attack_family(strategy: AttackStrategy):
    if strategy.kind is AttackKind.PRESENCE:
        return PRESENCE_FAMILY
    if strategy.kind is AttackKind.INTERCEPT:
        return INTERCEPT_FAMILY
    if strategy.kind is AttackKind.WEAK:
        return weak_family(float(strategy.eta))
    return None


def apply_attack(
    strategy: AttackStrategy,
    s: StateVector,
    transit: Transit,
    rand: float,
    round_index: int = 0,
    family=None,
) -> tuple[TracyObservation, StateVector]:
    """Let Tracy act on one channel transit.

    One uniform draw serves both decisions: with rate ``q`` the transit is
    measured iff ``rand < q``, and ``rand / q`` (uniform given that event) then
    selects the outcome.  ``family`` may be passed to reuse a prebuilt family.
    """
    if not strategy.covers(transit):
        return not_measured(round_index), s
    rate = strategy.rate
    if rand >= rate:
        return not_measured(round_index), s
    fam = family if family is not None else attack_family(strategy)
    label, post = measure(s, fam, rand / rate)
    return TracyObservation(round_index, label, _FOUND[label]), post


def channel_weight(s: StateVector) -> float:
    """Squared norm of the part of ``s`` outside both labs, i.e. on the channel."""
    c = s.amp[_C0:_C1 + 1]
    return float(c.real @ c.real + c.imag @ c.imag)


def distinguishability(fam: MeasurementFamily, psi: StateVector, phi: StateVector) -> float:
    """Largest gap ``|<psi|a_i|psi> - <phi|a_i|phi>|`` over local elements ``a_i``."""
    for lab, op in fam.elements:
        if not is_local(op):
            raise NotLocal(f"element {lab!r} is not of the form 1 (x) b")
    return max(abs(expectation(psi, op) - expectation(phi, op)) for op in fam.operators)


def is_nondisturbing(fam, s: StateVector) -> bool:
    """True iff ``s`` is an eigenvector of every element of ``fam``."""
    ops = fam.effects() if isinstance(fam, KrausFamily) else fam.operators
    for op in ops:
        v = op @ s.amp
        lam = np.vdot(s.amp, v)
        if np.linalg.norm(v - lam * s.amp) >= ALGEBRA_TOL:
            return False
    return True


ESTIMATE_FLOOR = 1e-12


def tracy_estimate(strategy: AttackStrategy, found: int) -> float:
    """Heuristic count of transmissions from Tracy's positive outcomes.

    Each round puts the channel package in reach with weight 1/2; a measured
    transit detects it with efficiency ``eta`` (1 for projective attacks).
    """
    if strategy.kind is AttackKind.NONE:
        return 0.0
    eff = float(strategy.eta) if strategy.kind is AttackKind.WEAK else 1.0
    return found / max(strategy.rate * eff * 0.5, ESTIMATE_FLOOR)


def _random_unit(rng, n: int) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def eq1_state(inner) -> StateVector:
    """(|a> + |c>) (x) |g> / sqrt2 for an inner state ``g`` in C^2."""
    g = np.asarray(inner, dtype=complex)
    g = g / np.linalg.norm(g)
    a = np.zeros(DIM, dtype=complex)
    a[list(subspace_indices(Location.ALICE))] = g / np.sqrt(2)
    a[list(subspace_indices(Location.CHANNEL))] = g / np.sqrt(2)
    return StateVector(a)


def random_local_povm(rng, n_elements: int = 3) -> list[np.ndarray]:
    """Generic POVM on the channel factor: b_i = S^-1/2 G_i S^-1/2."""
    gs = []
    for _ in range(n_elements):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        gs.append(a @ a.conj().T)
    w, v = np.linalg.eigh(sum(gs))
    s_inv = v @ np.diag(w ** -0.5) @ v.conj().T
    return [s_inv @ g @ s_inv for g in gs]


def random_eigen_povm(rng, inner, n_elements: int = 3) -> list[np.ndarray]:
    """Random POVM whose elements share eigenvalues on channel-vacuum and |c,g>.

    Each ``b_i = lam_i (|0><0| + |c,g><c,g|) + mu_i |c,g_perp><c,g_perp|`` with
    ``lam`` and ``mu`` independent points of the probability simplex.
    """
    g = np.asarray(inner, dtype=complex)
    g = g / np.linalg.norm(g)
    g_perp = np.array([-np.conj(g[1]), np.conj(g[0])])
    e0 = np.array([1, 0, 0], dtype=complex)
    eg = np.concatenate([[0], g])
    ep = np.concatenate([[0], g_perp])
    shared = np.outer(e0, e0.conj()) + np.outer(eg, eg.conj())
    rest = np.outer(ep, ep.conj())
    lam = rng.dirichlet(np.ones(n_elements))
    mu = rng.dirichlet(np.ones(n_elements))
    return [lam[i] * shared + mu[i] * rest for i in range(n_elements)]
