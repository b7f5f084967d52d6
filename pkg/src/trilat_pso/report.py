"""Text reports, CSV files and plots.

Text output is rendered through Jinja2 templates. CSV files start with one
``#`` comment line naming the schema and its version; plots are SVG files
rendered with matplotlib's non-interactive backend.
"""
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Union

import jinja2 as jj
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from loguru import logger  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402

from trilat_pso.topology import Topology  # noqa: E402

SCHEMA_VERSION = "v1"

CSV_HEADER_TEMPLATE = "# trilat-pso {{ kind }} {{ version }}: {{ columns | join(',') }}\n"

BASELINE_TEMPLATE = """Baseline flooding of {{ n_nodes }} nodes ({{ n_anchors }} anchors)
{{ "%-22s" | format("") }}{% for run in runs %}{{ "%12s" | format(run.label) }}{% endfor %}
{{ "%-22s" | format("Transmission range") }}{% for run in runs %}{{ "%12.2f" | format(run.range_m) }}{% endfor %}
{{ "%-22s" | format("Time (steps)") }}{% for run in runs %}{{ "%12d" | format(run.steps) }}{% endfor %}
{{ "%-22s" | format("Time (steps x N)") }}{% for run in runs %}{{ "%12d" | format(run.node_steps) }}{% endfor %}
{{ "%-22s" | format("Energy (mW)") }}{% for run in runs %}{{ "%12.2f" | format(run.power_mw) }}{% endfor %}
{{ "%-22s" | format("Messages") }}{% for run in runs %}{{ "%12d" | format(run.messages) }}{% endfor %}
{{ "%-22s" | format("Localized blind") }}{% for run in runs %}{{ "%12d" | format(run.localized_blind) }}{% endfor %}
{{ "%-22s" | format("Localized nodes") }}{% for run in runs %}{{ "%12d" | format(run.participants) }}{% endfor %}
"""

SUMMARY_TEMPLATE = """{{ title }}
{% for key, value in settings.items() %}  {{ key }} = {{ value }}
{% endfor %}{% if aggregate is not none %}
{{ "%-10s" | format("") }}{% for column in aggregate.columns %}{{ "%16s" | format(column) }}{% endfor %}
{% for label, row in aggregate.iterrows() %}{{ "%-10s" | format(label) }}{% for value in row %}{{ "%16.4f" | format(value) }}{% endfor %}
{% endfor %}{% endif %}"""

_ENV = jj.Environment(keep_trailing_newline=True)


def render_baseline(runs: Sequence[Mapping], n_nodes: int, n_anchors: int) -> str:
    """Render the baseline table.

    Parameters
    ----------
    runs: Sequence[Mapping]
        One mapping per run with ``label``, ``range_m``, ``steps``,
        ``node_steps``, ``power_mw``, ``messages``, ``localized_blind`` and
        ``participants``.
    n_nodes, n_anchors: int
    """
    template = _ENV.from_string(BASELINE_TEMPLATE)
    return template.render(runs=runs, n_nodes=n_nodes, n_anchors=n_anchors)


def render_summary(title: str, settings: Mapping[str, str], aggregate: pd.DataFrame = None) -> str:
    """Render the settings of a run and its aggregate statistics."""
    template = _ENV.from_string(SUMMARY_TEMPLATE)
    if aggregate is not None and aggregate.empty:
        aggregate = None
    return template.render(title=title, settings=settings, aggregate=aggregate)


def csv_header(kind: str, columns: Sequence[str]) -> str:
    return _ENV.from_string(CSV_HEADER_TEMPLATE).render(
        kind=kind, version=SCHEMA_VERSION, columns=list(columns)
    )


def write_csv(frame: pd.DataFrame, path: Union[str, Path], kind: str, index: bool = False) -> Path:
    """Write a frame as CSV preceded by its schema comment line."""
    path = Path(path)
    columns = ([frame.index.name or "index"] if index else []) + [str(c) for c in frame.columns]
    with open(path, "w", encoding="utf-8", newline="") as csv_file:
        csv_file.write(csv_header(kind, columns))
        frame.to_csv(csv_file, index=index, lineterminator="\n")
    logger.info("Wrote {} rows to {}.", len(frame), path)
    return path


def read_csv(path: Union[str, Path], **kwargs) -> pd.DataFrame:
    """Read a CSV written by :func:`write_csv`."""
    return pd.read_csv(path, comment="#", **kwargs)


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("Wrote plot {}.", path)
    return path


PAIRINGS = (
    ("steps", "power_mw", "localized_blind", "power_vs_time"),
    ("power_mw", "localized_blind", "steps", "localized_vs_power"),
)

LABELS = {
    "steps": "Localization time (steps)",
    "power_mw": "Transmit power (mW)",
    "localized_blind": "Localized blind nodes",
}


def emit_plots(records: pd.DataFrame, output_dir: Union[str, Path], stem: str) -> List[Path]:
    """Scatter plots of the solution rows, one per metric pairing.

    Parameters
    ----------
    records: pandas.DataFrame
        Solution rows with ``steps``, ``power_mw`` and ``localized_blind``.
    output_dir: str or Path
    stem: str
        File name prefix.

    Returns
    -------
    list of Path
        Written files; empty (with a warning) when there are no rows.
    """
    if records is None or records.empty:
        logger.warning("No solutions to plot for {}.", stem)
        return []
    output_dir = Path(output_dir)
    matplotlib.rcParams["svg.hashsalt"] = stem
    paths = []
    for x, y, colour, name in PAIRINGS:
        fig, ax = plt.subplots(figsize=(6, 4.5))
        points = ax.scatter(records[x], records[y], c=records[colour], cmap="viridis", s=18)
        fig.colorbar(points, ax=ax, label=LABELS[colour])
        ax.set_xlabel(LABELS[x])
        ax.set_ylabel(LABELS[y])
        ax.set_title(f"{stem}: {len(records)} solutions")
        fig.tight_layout()
        paths.append(_save(fig, output_dir / f"{stem}_{name}.svg"))
    return paths


def emit_sweep_plot(
    sweep: pd.DataFrame, output_dir: Union[str, Path], parameter: str, metrics: Dict[str, str] = None
) -> List[Path]:
    """Line plot of per-setting averages with one standard deviation error bars."""
    if sweep is None or sweep.empty:
        logger.warning("No sweep settings to plot for {}.", parameter)
        return []
    metrics = metrics or {"localized_blind": LABELS["localized_blind"], "power_mw": LABELS["power_mw"]}
    matplotlib.rcParams["svg.hashsalt"] = f"sweep_{parameter}"
    fig, axes = plt.subplots(len(metrics), 1, figsize=(7, 3 * len(metrics)), sharex=True)
    axes = [axes] if len(metrics) == 1 else list(axes)
    positions = range(len(sweep))
    for ax, (metric, label) in zip(axes, metrics.items()):
        ax.errorbar(positions, sweep[f"{metric}_avg"], yerr=sweep[f"{metric}_std"], marker="o")
        ax.set_ylabel(label)
    axes[-1].set_xticks(list(positions))
    axes[-1].set_xticklabels([str(s) for s in sweep["setting"]], rotation=30)
    axes[-1].set_xlabel(parameter)
    fig.tight_layout()
    return [_save(fig, Path(output_dir) / f"sweep_{parameter}.svg")]


def emit_topology_plot(
    topology: Topology,
    ranges: Mapping[str, float],
    output_dir: Union[str, Path],
    stem: str = "baseline",
) -> List[Path]:
    """Draw the network once per uniform range.

    Each panel links every pair of nodes within the panel's range of each
    other. Anchors are red and blind nodes black.

    Parameters
    ----------
    topology: Topology
    ranges: Mapping[str, float]
        Panel label to range in meters, e.g. ``{"Min": 63.28}``.
    output_dir: str or Path
    stem: str, default "baseline"

    Returns
    -------
    list of Path
        ``<stem>_topology.svg``, or nothing for an empty topology.
    """
    if len(topology) == 0 or not ranges:
        logger.warning("No nodes to draw for {}.", stem)
        return []
    xy = np.array([(node.x, node.y) for node in topology.nodes], dtype=float)
    anchors = topology.anchor_mask
    matplotlib.rcParams["svg.hashsalt"] = f"{stem}_topology"
    fig, axes = plt.subplots(1, len(ranges), figsize=(4.5 * len(ranges), 4.8), squeeze=False)
    for ax, (label, range_m) in zip(axes[0], ranges.items()):
        i, j = np.nonzero(np.triu(topology.distances <= range_m, k=1))
        links = np.stack([xy[i], xy[j]], axis=1)
        ax.add_collection(LineCollection(links, colors="0.7", linewidths=0.5, zorder=1))
        ax.scatter(xy[~anchors, 0], xy[~anchors, 1], c="black", s=8, zorder=2)
        ax.scatter(xy[anchors, 0], xy[anchors, 1], c="red", s=16, zorder=3)
        ax.set_xlim(0, topology.field_side)
        ax.set_ylim(0, topology.field_side)
        ax.set_aspect("equal")
        ax.set_title(f"{label}: {range_m:.2f} m, {len(i)} links")
    fig.tight_layout()
    return [_save(fig, Path(output_dir) / f"{stem}_topology.svg")]


LEVEL_COLUMNS = ("min_msgs", "mid_msgs", "max_msgs")


def emit_level_usage_plot(
    records: pd.DataFrame, output_dir: Union[str, Path], stem: str
) -> List[Path]:
    """Stacked bars of the messages sent at each power level, one bar per solution.

    Returns nothing (with a warning) when no row carries level counts, as in
    continuous runs.
    """
    if records is None or records.empty or not set(LEVEL_COLUMNS) <= set(records.columns):
        logger.warning("No per-level message counts to plot for {}.", stem)
        return []
    counts = records[list(LEVEL_COLUMNS)].astype(float)
    if counts.isna().all().all():
        logger.warning("No per-level message counts to plot for {}.", stem)
        return []
    counts = counts.fillna(0.0)
    matplotlib.rcParams["svg.hashsalt"] = f"{stem}_level_usage"
    fig, ax = plt.subplots(figsize=(max(6, 0.25 * len(counts)), 4.5))
    positions = np.arange(len(counts))
    bottom = np.zeros(len(counts))
    for column, label, colour in zip(LEVEL_COLUMNS, ("Min", "Mid", "Max"), ("C2", "C1", "C3")):
        heights = counts[column].to_numpy()
        ax.bar(positions, heights, bottom=bottom, width=0.8, label=label, color=colour)
        bottom += heights
    ax.set_xlabel("Solution")
    ax.set_ylabel("Messages sent")
    ax.set_title(f"{stem}: messages per power level")
    ax.legend()
    fig.tight_layout()
    return [_save(fig, Path(output_dir) / f"{stem}_level_usage.svg")]


COMPARISON_METRICS = ("steps", "power_mw", "localized_blind")


def emit_comparison_plot(
    comparison: pd.DataFrame, output_dir: Union[str, Path], stem: str = "compare"
) -> List[Path]:
    """Bars of per-method averages with one standard deviation error bars.

    ``comparison`` has one row per method with ``setting`` and the
    ``<metric>_avg`` / ``<metric>_std`` columns of a sweep row.
    """
    if comparison is None or comparison.empty:
        logger.warning("No methods to compare for {}.", stem)
        return []
    matplotlib.rcParams["svg.hashsalt"] = stem
    fig, axes = plt.subplots(1, len(COMPARISON_METRICS), figsize=(4 * len(COMPARISON_METRICS), 4))
    positions = np.arange(len(comparison))
    labels = [str(s) for s in comparison["setting"]]
    for ax, metric in zip(axes, COMPARISON_METRICS):
        ax.bar(
            positions,
            comparison[f"{metric}_avg"],
            yerr=comparison[f"{metric}_std"],
            capsize=4,
            color="0.6",
        )
        ax.set_xticks(positions)
        ax.set_xticklabels(labels)
        ax.set_ylabel(LABELS[metric])
    fig.tight_layout()
    return [_save(fig, Path(output_dir) / f"{stem}.svg")]
