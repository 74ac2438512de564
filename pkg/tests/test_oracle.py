import math
from fractions import Fraction
from itertools import product

import pytest

from qtraffic.adversary import AttackStrategy, TransitPolicy
from qtraffic.harness.oracle import (
    Surd,
    oracle_pair_distribution,
    oracle_rounds_per_bit,
    round_distribution,
    to_fraction,
)
from qtraffic.protocol import simulate_pairs
from qtraffic.stats import SUPPORT, empirical_frequencies, exact_null, total_variation


def test_surd_arithmetic():
    r2 = Surd.sqrt(2)
    assert r2 * r2 == 2
    assert Surd.sqrt(Fraction(1, 2)) * 2 == r2
    assert Surd.sqrt(8) == 2 * r2
    assert (r2 + 1) * (r2 - 1) == 1
    assert (Surd.sqrt(3) * Surd.sqrt(6)).simplify() != 3  # 3*sqrt(2)
    assert float(Surd.sqrt(3) * Surd.sqrt(6)) == pytest.approx(3 * math.sqrt(2))
    assert Surd.sqrt(0).is_zero()
    with pytest.raises(ArithmeticError):
        r2.as_fraction()


def test_to_fraction_reads_repr():
    assert to_fraction(0.1) == Fraction(1, 10)
    assert to_fraction(0.25) == Fraction(1, 4)


def test_null_table_exact():
    d = oracle_pair_distribution(AttackStrategy.none())
    assert d.exact
    assert d.probs == {x: p for x, p in exact_null().as_dict().items() if p}
    assert all(isinstance(p, Fraction) for p in d.probs.values())


def test_null_table_any_bits():
    for bits in ((0, 1), (1, 0), (1, 1)):
        d = oracle_pair_distribution(AttackStrategy.none(), bits)
        assert d.probs == oracle_pair_distribution(AttackStrategy.none()).probs


def _hand_full_presence():
    """Pair law for full outbound presence testing, derived by hand.

    Mirrored round: Tracy's collapse leaves a lone half package, so C and D
    fire 1/2 each.  Read round: found -> Bob gets the bit and the detectors
    stay silent (1/2); not found -> Bob sees nothing and C or D fires (1/4 each).
    """
    mir = {(1, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)}
    read = {(0, 0): Fraction(1, 2), (1, 0): Fraction(1, 4), (0, 1): Fraction(1, 4)}
    out = {}
    for first, second in ((mir, read), (read, mir)):
        for (a, pa), (b, pb) in product(first.items(), second.items()):
            x = (a[0], b[0], a[1], b[1])
            out[x] = out.get(x, 0) + Fraction(1, 2) * pa * pb
    return out


def test_full_presence_matches_hand_derivation():
    d = oracle_pair_distribution(AttackStrategy.presence(1))
    assert d.probs == _hand_full_presence()
    assert d.off_support_mass == Fraction(3, 8)
    assert d.conditional_on_support() == pytest.approx([0.2] * 5)


def test_off_support_mass_closed_forms():
    for q in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
        d = oracle_pair_distribution(AttackStrategy.presence(float(q)))
        assert d.off_support_mass == Fraction(3, 8) * q
    d = oracle_pair_distribution(AttackStrategy.intercept(0.5))
    assert d.off_support_mass == Fraction(3, 16)
    for eta in (0.3, 0.5, 0.84):
        d = oracle_pair_distribution(AttackStrategy.weak(eta))
        assert float(d.off_support_mass) == pytest.approx(0.375 * (1 - math.sqrt(1 - eta)), abs=1e-15)


def test_weak_zero_is_null():
    d = oracle_pair_distribution(AttackStrategy.weak(0.0))
    assert d.probs == oracle_pair_distribution(AttackStrategy.none()).probs


def test_irrational_weights_stay_exact():
    d = oracle_pair_distribution(AttackStrategy.weak(0.3))
    assert d.exact and d.total() == 1
    assert any(isinstance(p, Surd) for p in d.probs.values())


def test_monotone_in_q():
    masses = [oracle_pair_distribution(AttackStrategy.presence(q)).off_support_mass
              for q in (0, 0.25, 0.5, 1)]
    assert masses == sorted(masses)


def test_both_transits():
    d = oracle_pair_distribution(AttackStrategy.presence(1, TransitPolicy.BOTH))
    assert d.total() == 1
    assert d.off_support_mass >= Fraction(3, 8)


def test_mirrored_round_never_fires_d():
    for b in (0, 1):
        law = round_distribution(AttackStrategy.none(), mirrored=True, bit=b)
        assert law == {(1, 0): 1}


def test_rounds_per_bit():
    assert oracle_rounds_per_bit(AttackStrategy.none()) == (Fraction(7, 2), Fraction(4))


@pytest.mark.parametrize(
    "attack",
    [
        AttackStrategy.none(),
        AttackStrategy.presence(1),
        AttackStrategy.presence(0.25),
        AttackStrategy.weak(0.5),
        AttackStrategy.intercept(1),
        AttackStrategy.presence(1, TransitPolicy.BOTH),
    ],
    ids=lambda a: a.label,
)
def test_monte_carlo_matches_oracle(attack):
    n = 10_000
    emp = empirical_frequencies(simulate_pairs(attack, n, seed=31))
    tv = total_variation(emp, oracle_pair_distribution(attack).floats())
    assert tv <= 0.02
    if attack.kind.value == "none":
        assert all(emp[x] == 0 for x in emp if x not in SUPPORT)
