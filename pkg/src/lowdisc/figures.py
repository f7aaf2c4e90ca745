"""Matplotlib figure rendering for benchmark reports.

Renders PNG companions to the hand-emitted SVG: a success-rate chart and a
valid-milestone errorbar chart.  Uses the Agg backend so report generation
works headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_pngs"]


def _series(records):
    from lowdisc.bench import _display_orders, summarize

    summaries = {(s.experiment, s.sampler, s.n): s for s in summarize(records)}
    experiments, samplers, ns = _display_orders(records)
    ns = sorted(ns)
    out = []
    for exp in experiments:
        for sampler in samplers:
            cells = [
                summaries[(exp, sampler, n)]
                for n in ns
                if (exp, sampler, n) in summaries
            ]
            if cells:
                label = sampler if len(experiments) == 1 else f"{exp}/{sampler}"
                out.append((label, cells))
    return out


def render_pngs(records, out_dir) -> dict:
    """Write chart.png (success rate) and milestones.png; returns paths."""
    series = _series(records)
    paths = {}

    fig, ax = plt.subplots(figsize=(8, 5), dpi=100)
    for label, cells in series:
        ax.plot(
            [c.n for c in cells],
            [c.success_rate for c in cells],
            marker="o",
            label=label,
        )
    ax.set_xscale("log", base=2)
    ax.set_xlabel("points N")
    ax.set_ylabel("success rate %")
    ax.set_ylim(-2, 102)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    chart_path = os.path.join(out_dir, "chart.png")
    fig.savefig(chart_path)
    plt.close(fig)
    paths["chart_png"] = chart_path

    fig, ax = plt.subplots(figsize=(8, 5), dpi=100)
    for label, cells in series:
        ax.errorbar(
            [c.n for c in cells],
            [c.v_mean for c in cells],
            yerr=[c.v_std for c in cells],
            marker="s",
            capsize=3,
            label=label,
        )
    ax.set_xscale("log", base=2)
    ax.set_xlabel("points N")
    ax.set_ylabel("valid milestones")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    ms_path = os.path.join(out_dir, "milestones.png")
    fig.savefig(ms_path)
    plt.close(fig)
    paths["milestones_png"] = ms_path

    return paths
