"""Command line: ``qtraffic {simulate,experiment,oracle,selftest}``.

Settings come from ``--config FILE`` (see :mod:`qtraffic.harness.config`) and
are overridden by flags.  Exit status: 0 on success, 2 on a configuration
error, 1 when an invariant fails or an output cannot be written.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..protocol import ProtocolError, run_session
from .config import ConfigError, build_experiment, mix64, read_config_file
from .emit import EmitError, emit_results, emit_transcript
from .experiment import run_experiment, session_config_for, summarize

# flag dest -> config key
_FLAG_KEYS = {
    "message": "message", "bits": "bits", "attack": "attack", "q": "q", "eta": "eta",
    "transits": "transits", "alpha": "alpha", "nmin": "nmin", "policy": "policy",
    "max_pairs": "max_pairs", "payload_check": "payload_check", "sessions": "sessions",
    "seed": "seed", "workers": "workers", "delta": "delta", "t1": "t1",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file")
    msg = p.add_mutually_exclusive_group()
    msg.add_argument("--message", help="bit string to send, e.g. 0110")
    msg.add_argument("--bits", help="random message of this many bits")
    p.add_argument("--attack", help="none | presence | weak | intercept")
    p.add_argument("--q", help="measurement rate (comma list sweeps)")
    p.add_argument("--eta", help="weak measurement strength (comma list sweeps)")
    p.add_argument("--transits", help="outbound | both")
    p.add_argument("--alpha", help="test level (default 0.01)")
    p.add_argument("--nmin", help="pairs before the frequency test (default 8)")
    p.add_argument("--policy", help="spending | uncorrected (default spending)")
    p.add_argument("--max-pairs", dest="max_pairs", help="pair budget per session")
    p.add_argument("--payload-check", dest="payload_check", action="store_const",
                   const="true", help="abort when a detector sees the wrong bit")
    p.add_argument("--delta", help="round spacing used for timestamps")
    p.add_argument("--t1", help="start time used for timestamps")
    p.add_argument("--seed", help="base seed (default 0)")
    p.add_argument("--out", help="output file (simulate) or directory (experiment, oracle)")
    p.add_argument("--format", choices=("json_lines", "csv"), default="json_lines")


def _settings(args) -> dict[str, str]:
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    for dest, key in _FLAG_KEYS.items():
        val = getattr(args, dest, None)
        if val is not None:
            raw[key] = str(val)
    if "message" in raw and "bits" in raw and getattr(args, "message", None):
        raw.pop("bits")
    if "message" in raw and "bits" in raw and getattr(args, "bits", None):
        raw.pop("message")
    return raw


def cmd_simulate(args) -> int:
    cfg = build_experiment(_settings(args))
    attack = cfg.attacks()[0]
    seed = mix64(cfg.seed, 0)
    session = session_config_for(cfg, attack, seed)
    tr = run_session(replace(session, keep_rounds=True), seed)
    print(f"# attack={attack.label} seed={seed} message={''.join(map(str, tr.message))}")
    print("round  t        bit  mode      bob       C D  tracy        delivered")
    for r in tr.rounds:
        obs = ",".join(o.outcome_label or "-" for o in r.tracy)
        print(f"{r.round_index:5d}  {r.timestamp:<7.6g}  {r.bit_sent}    "
              f"{'mirror' if r.mirrored else 'read':8s}  {r.bob_result.value:8s}  "
              f"{r.detector.c_fired} {r.detector.d_fired}  {obs:11s}  {int(r.bit_delivered)}")
    s = summarize(tr, attack, 0, seed)
    print(f"verdict={s.verdict} reason={s.abort_reason} rounds={s.rounds_used} "
          f"pairs={s.pairs_tested} delivered={''.join(map(str, tr.delivered_message))}")
    if args.out:
        emit_transcript(tr, args.out, args.format)
    return 0


def cmd_experiment(args) -> int:
    cfg = build_experiment(_settings(args))
    result = run_experiment(cfg)
    cols = ("attack", "sessions", "abort_rate", "mean_det_pair", "rounds/bit", "oracle_off")
    print(f"{cols[0]:<28s}" + "".join(f"{c:>14s}" for c in cols[1:]))
    for a in result.aggregates:
        vals = (a.attack.label, a.sessions, a.abort_rate, a.mean_detection_pair,
                a.rounds_per_bit, a.oracle_off_support)
        cells = ("-" if v is None else f"{v:.6g}" if isinstance(v, float) else str(v) for v in vals[1:])
        print(f"{vals[0]:<28s}" + "".join(f"{c:>14s}" for c in cells))
    if args.out:
        paths = emit_results(result, args.out, args.format, figures=not args.no_figures)
        for p in paths:
            print(f"wrote {p}")
    bad = sum(a.norm_violations for a in result.aggregates)
    if bad:
        print(f"norm bound violated {bad} times", file=sys.stderr)
        return 1
    return 0


def cmd_oracle(args) -> int:
    from .oracle import oracle_pair_distribution, oracle_rounds_per_bit
    from ..stats import ALL_PAIRS, SUPPORT

    cfg = build_experiment(_settings(args))
    for attack in cfg.attacks():
        d = oracle_pair_distribution(attack)
        mode = "exact" if d.exact else f"floating point, error <= {d.error_bound:g}"
        print(f"# attack={attack.label} ({mode})")
        print("C1 C2 D1 D2  probability")
        for x in ALL_PAIRS:
            p = d.prob(x)
            if p:
                tag = "" if x in SUPPORT else "  off-support"
                print(f" {x[0]}  {x[1]}  {x[2]}  {x[3]}   {p} = {float(p):.12g}{tag}")
        print(f"off-support mass: {d.off_support_mass} = {float(d.off_support_mass):.12g}")
        e, lr = oracle_rounds_per_bit(attack)
        print(f"rounds per bit: {e} from a pair boundary, {lr} long run")
        if args.out:
            from .plots import plot_pair_distribution

            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            name = attack.label.replace("(", "_").replace(")", "").replace(",", "_").replace("=", "")
            plot_pair_distribution(d, out / f"oracle_{name}.png")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtraffic", description="Detecting traffic analysis with split wave packages."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one session and print its transcript")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="Monte Carlo sessions, optionally sweeping q/eta")
    _add_common(p)
    p.add_argument("--sessions", type=int, help="sessions per attack (default 100)")
    p.add_argument("--workers", help="worker processes (default 1)")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG report")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="exact pair distribution for an attack")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("selftest", help="run the invariant checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (EmitError, ProtocolError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
