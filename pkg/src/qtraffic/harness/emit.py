"""Byte-stable writers for transcripts, session summaries and aggregates.

Floats are written with 12 significant digits, booleans as true/false and
missing values as an empty CSV cell or JSON null.  Field order is fixed by the
``*_FIELDS`` tuples below.

sessions.jsonl / sessions.csv, one session per line:
    attack, session_index, seed, verdict, abort_reason, rounds_used,
    pairs_tested, detection_round, detection_pair, n, bits_delivered,
    tracy_found, tracy_estimate, true_transmissions, tracy_error,
    pairs_1100, pairs_1000, pairs_0100, pairs_1001, pairs_0110,
    off_support_pairs, last_p_value, norm_violations, max_channel_weight

transcript.jsonl, one round per line:
    round, bit_index, bit_sent, timestamp, mirrored, bob_result, c, d,
    detected_bit, bit_delivered, tracy, channel_weight

aggregate.csv, one attack per row: see AGGREGATE_FIELDS.

detection_curve.csv, one (attack, pairs) point per row:
    attack, pairs, detected_fraction, oracle_off_support_bound
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ..protocol import Transcript
from ..stats import SUPPORT
from .experiment import (
    AttackAggregate,
    ExperimentResult,
    SessionSummary,
    detection_curve,
    oracle_curve,
)

_CELL_NAMES = tuple("pairs_" + "".join(map(str, x)) for x in SUPPORT)

SESSION_FIELDS = (
    "attack", "session_index", "seed", "verdict", "abort_reason", "rounds_used",
    "pairs_tested", "detection_round", "detection_pair", "n", "bits_delivered",
    "tracy_found", "tracy_estimate", "true_transmissions", "tracy_error",
) + _CELL_NAMES + (
    "off_support_pairs", "last_p_value", "norm_violations", "max_channel_weight",
)

AGGREGATE_FIELDS = (
    "attack", "kind", "q", "eta", "transits", "sessions", "aborted", "abort_rate",
    "false_positive_rate", "off_support_aborts", "frequency_aborts",
    "mean_detection_pair", "rounds_per_bit", "mean_tracy_error",
    "mean_abs_tracy_error", "norm_violations", "oracle_off_support", "oracle_exact",
)

ROUND_FIELDS = (
    "round", "bit_index", "bit_sent", "timestamp", "mirrored", "bob_result", "c", "d",
    "detected_bit", "bit_delivered", "tracy", "channel_weight",
)

CURVE_FIELDS = ("attack", "pairs", "detected_fraction", "oracle_off_support_bound")


class EmitError(OSError):
    pass


def _num(x):
    """Round floats to 12 significant digits, leave everything else alone."""
    if isinstance(x, float):
        return float(f"{x:.12g}")
    return x


def _csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def session_row(s: SessionSummary) -> dict:
    row = {
        "attack": s.attack,
        "session_index": s.session_index,
        "seed": s.seed,
        "verdict": s.verdict,
        "abort_reason": s.abort_reason,
        "rounds_used": s.rounds_used,
        "pairs_tested": s.pairs_tested,
        "detection_round": s.detection_round,
        "detection_pair": s.detection_pair,
        "n": s.n,
        "bits_delivered": s.bits_delivered,
        "tracy_found": s.tracy_found,
        "tracy_estimate": s.tracy_estimate,
        "true_transmissions": s.true_transmissions,
        "tracy_error": s.tracy_error,
    }
    row.update(zip(_CELL_NAMES, s.pair_counts))
    row.update(
        off_support_pairs=s.off_support_pairs,
        last_p_value=s.last_p_value,
        norm_violations=s.norm_violations,
        max_channel_weight=s.max_channel_weight,
    )
    return row


def aggregate_row(a: AttackAggregate) -> dict:
    return {
        "attack": a.attack.label,
        "kind": a.attack.kind.value,
        "q": float(a.attack.q),
        "eta": float(a.attack.eta),
        "transits": a.attack.transit_policy.value,
        "sessions": a.sessions,
        "aborted": a.aborted,
        "abort_rate": a.abort_rate,
        "false_positive_rate": a.false_positive_rate,
        "off_support_aborts": a.off_support_aborts,
        "frequency_aborts": a.frequency_aborts,
        "mean_detection_pair": a.mean_detection_pair,
        "rounds_per_bit": a.rounds_per_bit,
        "mean_tracy_error": a.mean_tracy_error,
        "mean_abs_tracy_error": a.mean_abs_tracy_error,
        "norm_violations": a.norm_violations,
        "oracle_off_support": a.oracle_off_support,
        "oracle_exact": a.oracle_exact,
    }


def round_rows(tr: Transcript):
    for r in tr.rounds:
        yield {
            "round": r.round_index,
            "bit_index": r.bit_index,
            "bit_sent": r.bit_sent,
            "timestamp": r.timestamp,
            "mirrored": r.mirrored,
            "bob_result": r.bob_result.value,
            "c": r.detector.c_fired,
            "d": r.detector.d_fired,
            "detected_bit": r.detector.detected_bit,
            "bit_delivered": r.bit_delivered,
            "tracy": [o.outcome_label or "-" for o in r.tracy],
            "channel_weight": r.channel_weight,
        }


def curve_rows(result: ExperimentResult):
    for agg in result.aggregates:
        sums = result.for_attack(agg.attack.label)
        k_max = max((s.pairs_tested for s in sums), default=0)
        emp = detection_curve(sums, k_max)
        orc = oracle_curve(agg.oracle_off_support, k_max)
        for k in range(k_max):
            yield {
                "attack": agg.attack.label,
                "pairs": k + 1,
                "detected_fraction": emp[k],
                "oracle_off_support_bound": orc[k],
            }


def jsonl_text(rows, fields) -> str:
    out = io.StringIO()
    for row in rows:
        out.write(json.dumps({f: _num(row[f]) for f in fields}, separators=(",", ":")))
        out.write("\n")
    return out.getvalue()


def csv_text(rows, fields) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([_csv_cell(row[f]) for f in fields])
    return out.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise EmitError(f"cannot write {path}: {e.strerror or e}") from None
    return path


def emit_results(result: ExperimentResult, out_dir, fmt: str = "json_lines", *, figures: bool = True) -> list[Path]:
    """Write sessions, aggregate, detection curve and (optionally) its figure."""
    out_dir = Path(out_dir)
    rows = [session_row(s) for s in result.summaries]
    if fmt == "json_lines":
        paths = [_write(out_dir / "sessions.jsonl", jsonl_text(rows, SESSION_FIELDS))]
    elif fmt == "csv":
        paths = [_write(out_dir / "sessions.csv", csv_text(rows, SESSION_FIELDS))]
    else:
        raise ValueError(f"unknown format {fmt!r}; use json_lines or csv")
    paths.append(_write(
        out_dir / "aggregate.csv",
        csv_text([aggregate_row(a) for a in result.aggregates], AGGREGATE_FIELDS),
    ))
    paths.append(_write(out_dir / "detection_curve.csv", csv_text(curve_rows(result), CURVE_FIELDS)))
    if figures and result.aggregates:
        from .plots import plot_detection_curves

        path = out_dir / "detection_curve.png"
        try:
            plot_detection_curves(result, path)
        except OSError as e:
            raise EmitError(f"cannot write {path}: {e.strerror or e}") from None
        paths.append(path)
    return paths


def emit_transcript(tr: Transcript, path, fmt: str = "json_lines") -> Path:
    rows = list(round_rows(tr))
    if fmt == "csv":
        for r in rows:
            r["tracy"] = "|".join(r["tracy"])
        return _write(Path(path), csv_text(rows, ROUND_FIELDS))
    return _write(Path(path), jsonl_text(rows, ROUND_FIELDS))
