"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``PASS``/``FAIL`` line for its criterion straight
to the terminal (also under ``pytest -v``).  Run directly with
``python tests/test_acceptance.py`` for just these nine lines.
Seeds are fixed: 2026 everywhere a base seed is needed.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from qtraffic.adversary import (
    AttackStrategy,
    TransitPolicy,
    distinguishability,
    eq1_state,
    is_nondisturbing,
    local_family,
    random_eigen_povm,
    random_local_povm,
)
from qtraffic.harness.cli import main as cli_main
from qtraffic.harness.config import SessionConfig, build_experiment, mix64
from qtraffic.harness.experiment import oracle_curve, run_experiment, within_pairs_rate
from qtraffic.harness.oracle import oracle_pair_distribution, oracle_rounds_per_bit, round_distribution
from qtraffic.optics import detector_probabilities, prepare_and_split
from qtraffic.protocol import AliceState, BobState, Verdict, run_round, run_session, session_rng, simulate_pairs
from qtraffic.qstate import StateVector
from qtraffic.stats import empirical_frequencies, exact_null, step6_test, total_variation

SEED = 2026
# norm-bound violations seen by every session run in this module
_NORM = {"sessions": 0, "violations": 0}


@pytest.fixture
def report(capsys):
    def _report(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}")
        assert ok, detail
    return _report


def _track(summaries):
    _NORM["sessions"] += len(summaries)
    _NORM["violations"] += sum(s.norm_violations for s in summaries)


def test_1_null_distribution(report):
    t = time.perf_counter()
    d = oracle_pair_distribution(AttackStrategy.none())
    dt = time.perf_counter() - t
    table = {
        (1, 1, 0, 0): Fraction(1, 4), (1, 0, 0, 0): Fraction(1, 4), (0, 1, 0, 0): Fraction(1, 4),
        (1, 0, 0, 1): Fraction(1, 8), (0, 1, 1, 0): Fraction(1, 8),
    }
    full = {x: d.prob(x) for x in exact_null().as_dict()}
    ok = d.exact and full == {x: table.get(x, Fraction(0)) for x in full} and dt < 1
    report(1, ok, f"oracle(no attack) equals the table exactly, {dt * 1e3:.1f} ms")


def test_2_monte_carlo_agreement(report):
    t = time.perf_counter()
    pairs = simulate_pairs(AttackStrategy.none(), 100_000, SEED)
    v = step6_test(pairs, 0.001)
    tv = total_variation(empirical_frequencies(pairs), exact_null().as_dict())
    dt = time.perf_counter() - t
    ok = v.p_value > 0.001 and tv <= 0.01 and dt < 30
    report(2, ok, f"1e5 pairs: G-test p={v.p_value:.4f}, TV={tv:.5f}, {dt:.1f} s")


def test_3_interference_calibration(report):
    exact_d = max(
        float(sum(p for (c, d), p in round_distribution(AttackStrategy.none(), True, b).items() if d))
        for b in (0, 1)
    )
    numeric_d = max(float(sum(detector_probabilities(prepare_and_split(b))[2:4])) for b in (0, 1))
    # full rounds with Bob's device forced to mirror
    rng = session_rng(mix64(SEED, 3))
    alice = AliceState((0, 1) * 4)
    n = fired_d = 0
    while n < 100_000:
        out, a2, _ = run_round(alice, BobState(b=False, r=True), AttackStrategy.none(), rng)
        assert out.mirrored
        fired_d += out.detector.d_fired
        alice = AliceState(alice.message, i=(alice.i % len(alice.message)) + 1, a=a2.a)
        n += 1
    ok = exact_d < 1e-12 and numeric_d < 1e-12 and fired_d == 0
    report(3, ok, f"P(D | mirrored) oracle={exact_d}, numeric={numeric_d:.1e}; "
                  f"D fired {fired_d} times in {n} mirrored rounds")


def test_4_detection_power(report):
    attack = AttackStrategy.presence(1.0)
    off = oracle_pair_distribution(attack).off_support_mass
    exact_rate = 1 - (1 - float(off)) ** 10
    res = run_experiment(build_experiment(
        {"attack": "presence", "q": "1", "bits": "64", "sessions": "1000", "seed": str(SEED)}
    ))
    _track(res.summaries)
    rate = within_pairs_rate(res.summaries, 10)
    sigma = math.sqrt(exact_rate * (1 - exact_rate) / 1000)
    assert oracle_curve(float(off), 10)[-1] == pytest.approx(exact_rate)
    ok = off == Fraction(3, 8) and rate >= 0.99
    report(4, ok, f"off-support mass {off} (exact); aborted within 10 pairs: {rate:.3f} of 1000 "
                  f"(need >= 0.99; exact {exact_rate:.5f}, "
                  f"{(rate - exact_rate) / sigma:+.1f} sigma from it)")


def test_5_false_positive_control(report):
    res = run_experiment(build_experiment({
        "attack": "none", "alpha": "0.01", "nmin": "8", "message": "0" * 200,
        "max_pairs": "64", "sessions": "1000", "seed": str(SEED),
    }))
    _track(res.summaries)
    full = sum(s.pairs_tested == 64 for s in res.summaries if not s.aborted)
    rate = res.aggregates[0].abort_rate
    ok = rate <= 0.02 and full == 1000 - res.aggregates[0].aborted
    report(5, ok, f"no-attack abort rate {rate:.3f} over 1000 sessions of 64 pairs "
                  f"(alpha=0.01, n_min=8, spending checkpoints)")


def test_6_local_povm_property_suite(report):
    t = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst, disturbed = 0.0, 0
    for _ in range(1000):
        g = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi = eq1_state(g)
        fam = local_family(random_eigen_povm(rng, g, int(rng.integers(2, 6))))
        disturbed += not is_nondisturbing(fam, psi)
        worst = max(worst, distinguishability(fam, psi, StateVector.vacuum()))
    seen = nondisturbing = 0
    while seen < 1000:
        g = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi = eq1_state(g)
        fam = local_family(random_local_povm(rng, int(rng.integers(2, 6))))
        if distinguishability(fam, psi, StateVector.vacuum()) > 0.1:
            seen += 1
            nondisturbing += is_nondisturbing(fam, psi)
    dt = time.perf_counter() - t
    ok = disturbed == 0 and worst < 1e-9 and nondisturbing == 0 and dt < 10
    report(6, ok, f"1000 eigen families: max gap {worst:.1e}; 1000 distinguishing families: "
                  f"{nondisturbing} non-disturbing; {dt:.1f} s")


def test_7_norm_bound(report):
    attacks = [
        AttackStrategy.none(), AttackStrategy.presence(0.5), AttackStrategy.weak(0.3),
        AttackStrategy.intercept(1), AttackStrategy.presence(1, TransitPolicy.BOTH),
        AttackStrategy.weak(0.7, TransitPolicy.BOTH),
    ]
    worst = 0.0
    for k, attack in enumerate(attacks):
        for i in range(100):
            seed = mix64(SEED, 1000 * k + i)
            tr = run_session(SessionConfig(message=(0, 1, 1, 0, 1), attack=attack), seed)
            _NORM["sessions"] += 1
            _NORM["violations"] += tr.norm_violations
            worst = max(worst, tr.max_channel_weight)
    ok = _NORM["violations"] == 0 and worst <= 0.5 + 1e-9
    report(7, ok, f"{_NORM['violations']} violations over {_NORM['sessions']} sessions; "
                  f"largest channel weight {worst:.12g}")


def test_8_delivery_and_throughput(report):
    wrong = 0
    for i in range(1000):
        rng = np.random.default_rng(mix64(SEED, i))
        msg = tuple(int(b) for b in rng.integers(0, 2, 16))
        tr = run_session(SessionConfig(message=msg), mix64(SEED, 10_000 + i))
        wrong += tr.verdict is Verdict.COMPLETED and tr.delivered_message != msg
        wrong += tr.verdict is Verdict.ABORTED and tr.delivered_message != msg[:tr.bits_delivered]
    # one-bit sessions: every bit starts at a pair boundary
    rounds = sum(
        run_session(SessionConfig(message=(i & 1,), n_min=10 ** 9), mix64(SEED + 1, i)).rounds_used
        for i in range(100_000)
    )
    mean = rounds / 100_000
    e, _ = oracle_rounds_per_bit(AttackStrategy.none())
    ok = wrong == 0 and e == Fraction(7, 2) and abs(mean - 3.5) <= 0.035
    report(8, ok, f"1000 messages delivered intact ({wrong} wrong); rounds per bit "
                  f"{mean:.4f} over 1e5 bits (oracle {e})")


def test_9_determinism(report, tmp_path, capsys):
    args = ["experiment", "--attack", "presence", "--q", "0,0.5,1", "--bits", "8",
            "--sessions", "40", "--seed", str(SEED)]
    for fmt in ("json_lines", "csv"):
        assert cli_main(args + ["--format", fmt, "--out", str(tmp_path / f"a_{fmt}")]) == 0
        assert cli_main(args + ["--format", fmt, "--out", str(tmp_path / f"b_{fmt}")]) == 0
    capsys.readouterr()
    pairs = [
        (a, tmp_path / f"b_{fmt}" / a.name)
        for fmt in ("json_lines", "csv")
        for a in sorted((tmp_path / f"a_{fmt}").iterdir())
    ]
    same = all(a.read_bytes() == b.read_bytes() for a, b in pairs)
    n = len(pairs)
    report(9, same and n == 8, f"{n} output files byte-identical across two runs")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
