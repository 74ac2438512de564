import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtraffic.adversary import PRESENCE_FAMILY
from qtraffic.optics import BOB_READ, prepare_and_split
from qtraffic.qstate import (
    DIM,
    BasisState,
    InvalidFamily,
    KrausFamily,
    Location,
    MeasurementFamily,
    NotHermitian,
    QStateError,
    StateVector,
    ZeroVector,
    equal_up_to_phase,
    expectation,
    index,
    inner_product,
    location_projector,
    measure,
    normalize,
    projector,
    select_interval,
)

R2 = 1 / np.sqrt(2)
A0, A1 = index(Location.ALICE, 0), index(Location.ALICE, 1)
C0, C1 = index(Location.CHANNEL, 0), index(Location.CHANNEL, 1)
B0, B1 = index(Location.BOB, 0), index(Location.BOB, 1)


def vec(**amps):
    a = np.zeros(DIM, dtype=complex)
    for k, v in amps.items():
        a[globals()[k]] = v
    return a


def test_basis_layout():
    assert [b.index for b in map(BasisState.from_index, range(DIM))] == list(range(DIM))
    assert (A0, A1, C0, C1, B0, B1) == (1, 2, 3, 4, 5, 6)


def test_normalize_examples():
    a = np.zeros(DIM)
    a[0] = 2
    assert normalize(a) == StateVector.basis(0)
    s = StateVector(vec(A0=R2, C0=R2))
    assert normalize(s) == s
    assert normalize(3 * vec(A0=R2, C0=R2)) == s


def test_normalize_zero():
    with pytest.raises(ZeroVector):
        normalize(np.zeros(DIM))
    with pytest.raises(ZeroVector):
        normalize(np.full(DIM, 1e-14))


def test_state_must_be_unit():
    with pytest.raises(QStateError):
        StateVector(vec(A0=1, C0=1))


def test_inner_product_examples():
    for j in range(DIM):
        for k in range(DIM):
            assert inner_product(StateVector.basis(j), StateVector.basis(k)) == (j == k)
    plus = StateVector(vec(A0=R2, C0=R2))
    minus = StateVector(vec(A0=R2, C0=-R2))
    assert abs(inner_product(plus, minus)) < 1e-15


def test_inner_product_conjugate_linear():
    x = StateVector(vec(A0=1j))
    y = StateVector(vec(A0=1))
    assert inner_product(x, y) == pytest.approx(-1j)


def test_expectation_examples():
    chan = location_projector(Location.CHANNEL)
    assert expectation(StateVector.basis(C0), chan) == 1.0
    assert expectation(prepare_and_split(0), chan) == pytest.approx(0.5, abs=1e-15)
    assert expectation(StateVector.vacuum(), chan) == 0.0


def test_expectation_rejects_non_hermitian():
    op = np.zeros((DIM, DIM))
    op[0, 1] = 1
    with pytest.raises(NotHermitian):
        expectation(StateVector.vacuum(), op)


def test_measure_bob_epsilon():
    s = StateVector(vec(A0=R2, B0=R2))
    label, post = measure(s, BOB_READ, 0.9)
    assert label == "epsilon"
    assert post == StateVector.basis(A0)


def test_measure_eigenstate_untouched():
    s = StateVector.basis(B1)
    for r in np.linspace(0, 0.999, 11):
        assert measure(s, BOB_READ, r) == ("1", s)


def test_measure_presence_branches():
    s = prepare_and_split(0)
    assert measure(s, PRESENCE_FAMILY, 0.25) == ("found", StateVector.basis(C0))
    assert measure(s, PRESENCE_FAMILY, 0.75) == ("not_found", StateVector.basis(A0))


def test_select_interval_skips_empty():
    assert select_interval([0.0, 0.5, 0.0, 0.5], 0.0) == 1
    assert select_interval([0.0, 0.5, 0.0, 0.5], 0.5) == 3
    # rounding shortfall lands on the last nonzero interval
    assert select_interval([0.5, 0.5 - 1e-13, 0.0], 1 - 1e-14) == 1
    with pytest.raises(ValueError):
        select_interval([1.0], 1.0)


def test_family_validation():
    with pytest.raises(InvalidFamily):
        MeasurementFamily([("a", projector([0]))])  # incomplete
    half = np.eye(DIM) / 2
    with pytest.raises(InvalidFamily):
        MeasurementFamily([("a", half), ("b", half)], projective=True)
    MeasurementFamily([("a", half), ("b", half)])
    neg = np.eye(DIM)
    neg[0, 0] = -1
    with pytest.raises(InvalidFamily):
        MeasurementFamily([("a", neg), ("b", np.eye(DIM) - neg)])
    with pytest.raises(InvalidFamily):
        KrausFamily([("a", np.eye(DIM)), ("b", np.eye(DIM))])


def test_equal_up_to_phase():
    s = prepare_and_split(1)
    assert equal_up_to_phase(s, StateVector(np.exp(0.7j) * s.amp))
    assert not equal_up_to_phase(s, prepare_and_split(0))


unit = st.lists(
    st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=DIM, max_size=DIM
).map(lambda xs: np.array([a + 1j * b for a, b in xs])).filter(
    lambda a: np.linalg.norm(a) > 1e-3
)


@settings(max_examples=60, deadline=None)
@given(unit, st.floats(0, 0.999999))
def test_measure_preserves_norm(a, r):
    s = normalize(a)
    for fam in (BOB_READ, PRESENCE_FAMILY):
        _, post = measure(s, fam, r)
        assert abs(post.norm() - 1) < 1e-9


@settings(max_examples=15, deadline=None)
@given(unit)
def test_born_rule_on_grid(a):
    s = normalize(a)
    n = 4000
    grid = (np.arange(n) + 0.5) / n
    labels = [measure(s, BOB_READ, r)[0] for r in grid]
    probs = BOB_READ.probabilities(s)
    for lab, p in zip(BOB_READ.labels, probs):
        if p > 1e-9:
            assert labels.count(lab) / n == pytest.approx(p, abs=2 / n)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, DIM - 1), st.floats(0, np.pi), st.floats(0, 0.999999))
def test_eigenstate_not_disturbed(k, phase, r):
    s = StateVector(np.exp(1j * phase) * StateVector.basis(k).amp)
    for fam in (BOB_READ, PRESENCE_FAMILY):
        _, post = measure(s, fam, r)
        assert equal_up_to_phase(post, s)
