"""Matplotlib figure rendering for the report pipeline.

All functions write image files and return the written path; matplotlib is
imported lazily with the Agg backend so headless runs and figure-free CLI
invocations stay cheap.
"""
from __future__ import annotations

import os

from .records import (
    PAYLOAD_BUCKET_ORDER,
    AggregateCell,
    Sentinel,
    SpeedBucket,
    Technology,
)

_TECH_COLORS = {
    Technology.NBIOT: "#1f77b4",
    Technology.LORAWAN: "#2ca02c",
    Technology.SIGFOX: "#d62728",
}


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_speed_lines(
    series_by_tech: dict[Technology, list[tuple[SpeedBucket, float, int]]], path
) -> str:
    """PDR versus speed bucket, one line per technology."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 3.2))
    for tech, series in series_by_tech.items():
        if not series:
            continue
        labels = [bucket.label for bucket, _, _ in series]
        values = [pdr for _, pdr, _ in series]
        ax.plot(labels, values, marker="o", label=tech.value, color=_TECH_COLORS[tech])
    ax.set_ylabel("PDR [%]")
    ax.set_ylim(0, 100)
    ax.grid(True, linestyle="--", alpha=0.5)
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.fspath(path)


def _grouped_bars(cells: list[AggregateCell], value_of, ylabel: str, path, log=False) -> str:
    plt = _plt()
    scenarios = sorted({c.scenario.key for c in cells})
    fig, axes = plt.subplots(
        1, max(len(scenarios), 1), figsize=(4.0 * max(len(scenarios), 1), 3.2), squeeze=False
    )
    for ax, scenario_key in zip(axes[0], scenarios):
        buckets = [b.value for b in PAYLOAD_BUCKET_ORDER]
        width = 0.27
        for i, tech in enumerate(_TECH_COLORS):
            values = []
            for b in PAYLOAD_BUCKET_ORDER:
                cell = next(
                    (
                        c
                        for c in cells
                        if c.scenario.key == scenario_key
                        and c.technology is tech
                        and c.bucket is b
                    ),
                    None,
                )
                v = None if cell is None else value_of(cell)
                values.append(0.0 if v is None or isinstance(v, Sentinel) else v)
            xs = [j + (i - 1) * width for j in range(len(buckets))]
            ax.bar(xs, values, width=width, label=tech.value, color=_TECH_COLORS[tech])
        ax.set_xticks(range(len(buckets)))
        ax.set_xticklabels(buckets, fontsize=8)
        ax.set_title(scenario_key, fontsize=9)
        ax.set_ylabel(ylabel, fontsize=8)
        if log:
            ax.set_yscale("symlog", linthresh=0.1)
        ax.grid(True, axis="y", linestyle="--", alpha=0.5)
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.fspath(path)


def render_eb_bars(cells: list[AggregateCell], path) -> str:
    """Energy per byte by payload bucket, grouped per scenario."""
    return _grouped_bars(
        cells, lambda c: c.eb_uwh_per_byte, "E_b [uWh/B]", path, log=True
    )


def render_pdr_bars(cells: list[AggregateCell], path) -> str:
    """PDR by payload bucket, grouped per scenario."""
    return _grouped_bars(cells, lambda c: c.pdr_pct, "PDR [%]", path)


def render_residual_box(residuals_by_tech: dict[str, list[float]], path) -> str:
    """Horizontal box plot of calibration residuals per technology."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 2.8))
    names = list(residuals_by_tech)
    ax.boxplot(
        [residuals_by_tech[n] for n in names],
        vert=False,
        labels=names,
        whis=1.5,
    )
    ax.set_xlabel("Error [%]")
    ax.grid(True, axis="x", linestyle="--", alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.fspath(path)
