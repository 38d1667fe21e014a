"""Figure rendering for the report paths (verify tables, experiment ladders).

Figures are written next to the delimited output; no interactive backend
is ever required.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVEFIG_KW = {"dpi": 130, "bbox_inches": "tight", "metadata": {"Software": None}}


def save_verify_figure(rows, path):
    """Horizontal bar chart of per-check worst violations (log scale)."""
    names = [r.check for r in rows]
    viols = [max(r.max_violation, 1e-18) for r in rows]
    colors = ["#2a7e43" if r.passed else "#b03a2e" for r in rows]
    fig, ax = plt.subplots(figsize=(8, 0.38 * len(rows) + 1.2))
    ax.barh(range(len(rows)), viols, color=colors)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xscale("log")
    ax.set_xlabel("max violation")
    ax.invert_yaxis()
    ax.grid(axis="x", alpha=0.3)
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def save_consistency_figure(ladder, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ladder.levels, np.maximum(ladder.bl_to_finest, 1e-12), "o-")
    ax.set_yscale("log")
    ax.set_xlabel("discretization level")
    ax.set_ylabel("BL distance to finest level")
    if ladder.bl_to_reference is not None:
        ax.axhline(ladder.bl_to_reference, color="gray", ls="--", lw=1,
                   label=f"finest vs reference = {ladder.bl_to_reference:.2e}")
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def save_case_figure(ladder, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for lv in ladder.levels:
        eps = [v.epsilon for v in lv.verdicts]
        mass = [max(v.mass_at_delta, 1e-12) for v in lv.verdicts]
        ax.plot(eps, mass, "o-", label=f"level {lv.level}")
    lo = min(v.epsilon for lv in ladder.levels for v in lv.verdicts)
    ax.plot([lo, 0.5], [lo, 0.5], "k--", lw=1, label="mass = epsilon")
    if ladder.control:
        ax.plot(
            [v.delta for v in ladder.control],
            [v.mass_at_delta for v in ladder.control],
            "x", color="#b03a2e", label="dirac control",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("mass within volume delta")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
