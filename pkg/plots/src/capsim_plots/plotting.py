"""Band-chart rendering over the experiment CSV schema."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CSV_COLUMNS = ("experiment", "param", "value", "trial", "metric", "metric_value")

# Fixed hash salt so SVG element ids do not vary run to run.
matplotlib.rcParams["svg.hashsalt"] = "capsim-plots"


class PlotSpecError(ValueError):
    """Invalid plot spec or a spec that selects nothing from the CSV."""


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: x comes from rows whose param matches, one series per group."""

    param: str
    metrics: tuple[str, ...]
    series: str = "experiment"
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    logx: bool = False
    csv: str | None = None
    out: str | None = None

    def __post_init__(self):
        if not self.metrics:
            raise PlotSpecError("spec.metrics: need at least one metric")
        if self.series not in ("experiment", "metric"):
            raise PlotSpecError("spec.series: must be 'experiment' or 'metric'")

    @classmethod
    def load(cls, path) -> "PlotSpec":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise PlotSpecError(f"{path}: not valid JSON ({exc})") from exc
        known = {"param", "metrics", "series", "xlabel", "ylabel", "title",
                 "logx", "csv", "out"}
        unknown = set(data) - known
        if unknown:
            raise PlotSpecError(f"{path}: unknown spec fields {sorted(unknown)}")
        if "param" not in data or "metrics" not in data:
            raise PlotSpecError(f"{path}: spec needs 'param' and 'metrics'")
        data["metrics"] = tuple(data["metrics"])
        return cls(**data)


def load_rows(csv_path) -> list[dict]:
    with open(csv_path, newline="") as handle:
        reader = csv.DictReader(handle)
        header = tuple(reader.fieldnames or ())
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise PlotSpecError(f"{csv_path}: missing columns {missing}")
        return list(reader)


def _series_points(rows, spec, metric):
    """Per series label: sorted x values with (mean, low, high) triples."""
    groups: dict[str, dict[float, list[float]]] = {}
    for row in rows:
        if row["param"] != spec.param or row["metric"] != metric:
            continue
        try:
            x = float(row["value"])
        except ValueError as exc:
            raise PlotSpecError(
                f"non-numeric x value {row['value']!r} for param {spec.param!r}"
            ) from exc
        label = row["experiment"] if spec.series == "experiment" else metric
        groups.setdefault(label, {}).setdefault(x, []).append(
            float(row["metric_value"]))
    out = {}
    for label, by_x in groups.items():
        xs = sorted(by_x)
        stats = [(np.mean(by_x[x]), np.min(by_x[x]), np.max(by_x[x])) for x in xs]
        out[label] = (np.array(xs), np.array(stats))
    return out


def plot_band(spec: PlotSpec, csv_path, out_path) -> Path:
    """Render one chart per metric: mean line plus min-max band per series.

    Purely a view over the CSV; nothing is recomputed beyond the per-x
    mean and range. Raises when a referenced column, param, or metric
    selects no rows.
    """
    rows = load_rows(csv_path)
    out_path = Path(out_path)
    fig, axes = plt.subplots(1, len(spec.metrics),
                             figsize=(5.0 * len(spec.metrics), 3.6),
                             squeeze=False)
    for axis, metric in zip(axes[0], spec.metrics):
        series = _series_points(rows, spec, metric)
        if not series:
            plt.close(fig)
            raise PlotSpecError(
                f"no rows match param={spec.param!r}, metric={metric!r}")
        for label in sorted(series):
            xs, stats = series[label]
            axis.fill_between(xs, stats[:, 1], stats[:, 2], alpha=0.25, lw=0)
            axis.plot(xs, stats[:, 0], lw=1.8, label=label)
        if spec.logx:
            axis.set_xscale("log")
        axis.set_xlabel(spec.xlabel or spec.param)
        axis.set_ylabel(spec.ylabel or metric)
        axis.legend(frameon=False, fontsize=8)
        if spec.title:
            axis.set_title(spec.title, fontsize=10)
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    # Date metadata is stripped so identical CSV input yields identical bytes.
    image_format = out_path.suffix.lstrip(".").lower() or "svg"
    metadata = {"Date": None} if image_format == "svg" else None
    fig.savefig(out_path, format=image_format, metadata=metadata)
    plt.close(fig)
    return out_path
