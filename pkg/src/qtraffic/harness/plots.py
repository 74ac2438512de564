"""Figures written next to the CSV reports."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..stats import SUPPORT, exact_null  # noqa: E402
from .experiment import detection_curve, oracle_curve  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "qtraffic",
}

# no timestamps or version strings, so identical data gives identical bytes
_META = {"Software": None}


def figsize(scale: float = 1.0) -> tuple[float, float]:
    width = 5.0 * scale
    return width, width * (math.sqrt(5) - 1) / 2


def plot_detection_curves(result, path) -> None:
    """Fraction of sessions aborted by pair k, with the off-support bound."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for i, agg in enumerate(result.aggregates):
            sums = result.for_attack(agg.attack.label)
            k_max = max((s.pairs_tested for s in sums), default=0)
            if k_max == 0:
                continue
            ks = range(1, k_max + 1)
            color = f"C{i % 10}"
            ax.step(ks, detection_curve(sums, k_max), where="post", color=color,
                    label=agg.attack.label)
            if agg.oracle_off_support > 0:
                ax.plot(ks, oracle_curve(agg.oracle_off_support, k_max), ls="--",
                        color=color, lw=0.9)
        ax.set_xlabel("pairs tested")
        ax.set_ylabel("sessions aborted")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="lower right")
        fig.tight_layout()
        fig.savefig(path, dpi=150, metadata=_META)
        plt.close(fig)


def plot_pair_distribution(dist, path) -> None:
    """Exact pair law under an attack next to the no-attack table."""
    null = exact_null()
    labels = ["".join(map(str, x)) for x in SUPPORT] + ["other"]
    attacked = [float(dist.prob(x)) for x in SUPPORT] + [float(dist.off_support_mass)]
    base = [float(null.prob(x)) for x in SUPPORT] + [0.0]
    xs = range(len(labels))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.bar([x - 0.2 for x in xs], base, width=0.4, label="no attack")
        ax.bar([x + 0.2 for x in xs], attacked, width=0.4, label=dist.attack.label)
        ax.set_xticks(list(xs), labels)
        ax.set_xlabel("(C1, C2, D1, D2)")
        ax.set_ylabel("probability")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=150, metadata=_META)
        plt.close(fig)
