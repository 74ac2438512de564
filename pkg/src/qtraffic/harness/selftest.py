"""Fast invariant checks behind ``qtraffic selftest``."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..adversary import (
    AttackStrategy,
    distinguishability,
    eq1_state,
    is_nondisturbing,
    local_family,
    random_eigen_povm,
    random_local_povm,
)
from ..protocol import Verdict, run_session, simulate_pairs
from ..qstate import StateVector
from ..stats import exact_null, step6_test, total_variation
from .config import SessionConfig
from .oracle import oracle_pair_distribution, oracle_rounds_per_bit, round_distribution


def _null_table():
    d = oracle_pair_distribution(AttackStrategy.none())
    ok = d.probs == {x: p for x, p in exact_null().as_dict().items() if p}
    return ok, "oracle(no attack) equals the null table"


def _calibration():
    law = round_distribution(AttackStrategy.none(), mirrored=True)
    ok = law.get((0, 1), 0) == 0 and law == {(1, 0): 1}
    return ok, f"mirrored round law {law}"


def _full_attack():
    m = oracle_pair_distribution(AttackStrategy.presence(1)).off_support_mass
    return m == Fraction(3, 8), f"off-support mass {m}"


def _throughput():
    e, long_run = oracle_rounds_per_bit(AttackStrategy.none())
    return e == Fraction(7, 2), f"rounds per bit {e} from a pair boundary, {long_run} long run"


def _eigen_families(n=200, seed=1):
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, 0
    for _ in range(n):
        g = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi = eq1_state(g)
        fam = local_family(random_eigen_povm(rng, g, int(rng.integers(2, 5))))
        fails += not is_nondisturbing(fam, psi)
        worst = max(worst, distinguishability(fam, psi, StateVector.vacuum()))
    return fails == 0 and worst < 1e-9, f"{n} eigen families, max gap {worst:.2e}"


def _contrapositive(n=200, seed=2):
    rng = np.random.default_rng(seed)
    seen = bad = 0
    while seen < n:
        g = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi = eq1_state(g)
        fam = local_family(random_local_povm(rng, int(rng.integers(2, 5))))
        if distinguishability(fam, psi, StateVector.vacuum()) > 0.1:
            seen += 1
            bad += is_nondisturbing(fam, psi)
    return bad == 0, f"{n} distinguishing families, {bad} non-disturbing"


def _monte_carlo(n=4000, seed=3):
    pairs = simulate_pairs(AttackStrategy.none(), n, seed)
    v = step6_test(pairs, 0.001)
    from ..stats import empirical_frequencies

    tv = total_variation(empirical_frequencies(pairs), exact_null().as_dict())
    return not v.rejected and tv < 0.03, f"p={v.p_value:.3g}, TV={tv:.4f} over {n} pairs"


def _delivery(n=50):
    cfg = SessionConfig(message=(1, 0, 1, 1, 0), keep_rounds=False)
    bad = sum(
        tr.verdict is Verdict.COMPLETED and tr.delivered_message != cfg.message
        or tr.norm_violations
        for tr in (run_session(cfg, s) for s in range(n))
    )
    return bad == 0, f"{n} sessions, {bad} wrong deliveries or norm violations"


CHECKS = (
    ("null-table", _null_table),
    ("interference-calibration", _calibration),
    ("full-attack-off-support", _full_attack),
    ("rounds-per-bit", _throughput),
    ("eigen-families", _eigen_families),
    ("distinguishing-families", _contrapositive),
    ("monte-carlo-null", _monte_carlo),
    ("delivery-and-norm-bound", _delivery),
)


def run_selftest() -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as e:  # report, don't crash the suite
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append((name, bool(ok), detail))
    return out
