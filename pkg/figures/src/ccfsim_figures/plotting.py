"""Publication-style CDF plots from the simulator's cdf CSV files.

Consumes only the documented CSV contract (``controller,se_value,cdf_prob``
with an optional leading ``#`` metadata line) and renders monotone step
curves, one per controller/series label.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

REQUIRED_COLUMNS = ("controller", "se_value", "cdf_prob")
X_LABEL = "Spectral efficiency per user (bit/s/Hz)"
Y_LABEL = "Cumulative probability"
HASH_SALT = "ccfsim-figures"


class SchemaError(ValueError):
    """The input CSV does not match the documented cdf schema."""


class CurveError(ValueError):
    """A curve violates the CDF monotonicity invariants."""


@dataclass(frozen=True)
class Curve:
    label: str
    values: tuple
    probabilities: tuple


@dataclass(frozen=True)
class PlotSpec:
    """One rendering job: input CSVs, curve selection, output image."""

    inputs: tuple
    output: str
    labels: tuple | None = None        # subset/order of curve labels; None = all
    x_range: tuple | None = None
    y_range: tuple | None = None
    median_lines: bool = False
    title: str | None = None
    deterministic: bool = False

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.labels is not None and len(set(self.labels)) != len(self.labels):
            raise ValueError("curve labels must be unique")


@dataclass
class RenderResult:
    """What was drawn: output path plus curve labels per panel."""

    output: str
    panels: list = field(default_factory=list)   # list of label lists


def read_cdf_csv(path):
    """Parse one cdf CSV into ordered curves, enforcing the schema."""
    with open(path, encoding="utf-8") as handle:
        rows = [line for line in handle.read().splitlines() if not line.startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames is None:
        raise SchemaError(f"{path}: empty file, expected header {','.join(REQUIRED_COLUMNS)}")
    for column in REQUIRED_COLUMNS:
        if column not in reader.fieldnames:
            raise SchemaError(f"{path}: missing required column {column!r}")
    series = {}
    for row in reader:
        try:
            value = float(row["se_value"])
            prob = float(row["cdf_prob"])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: non-numeric entry in column 'se_value'/'cdf_prob'") from exc
        bucket = series.setdefault(row["controller"], ([], []))
        bucket[0].append(value)
        bucket[1].append(prob)
    if not series:
        raise SchemaError(f"{path}: no data rows")
    return [Curve(label, tuple(v), tuple(p)) for label, (v, p) in series.items()]


def validate_curve(curve: Curve):
    """CDF invariants: probabilities strictly increasing in (0, 1], values sorted."""
    probs, values = curve.probabilities, curve.values
    if any(b <= a for a, b in zip(probs, probs[1:])):
        raise CurveError(f"curve {curve.label!r}: cdf_prob is not strictly increasing")
    if probs and not (0.0 < probs[0] and probs[-1] <= 1.0 + 1e-12):
        raise CurveError(f"curve {curve.label!r}: cdf_prob outside (0, 1]")
    if any(b < a for a, b in zip(values, values[1:])):
        raise CurveError(f"curve {curve.label!r}: se_value is not non-decreasing")


def load_curves(spec: PlotSpec):
    """Read every input of a spec and apply label selection, preserving order."""
    curves = []
    for path in spec.inputs:
        curves.extend(read_cdf_csv(path))
    for curve in curves:
        validate_curve(curve)
    if spec.labels is None:
        return curves
    by_label = {curve.label: curve for curve in curves}
    missing = [label for label in spec.labels if label not in by_label]
    if missing:
        raise ValueError(f"labels not present in inputs: {missing}")
    return [by_label[label] for label in spec.labels]


def _median_of(curve: Curve):
    for value, prob in zip(curve.values, curve.probabilities):
        if prob >= 0.5:
            return value
    return curve.values[-1]


def _draw_panel(ax, curves, spec: PlotSpec):
    for curve in curves:
        ax.step(curve.values, curve.probabilities, where="post", label=curve.label)
        if spec.median_lines:
            ax.axvline(_median_of(curve), linestyle=":", linewidth=0.8, color="gray")
    ax.set_xlabel(X_LABEL)
    ax.set_ylabel(Y_LABEL)
    ax.set_ylim(*(spec.y_range or (0.0, 1.0)))
    if spec.x_range is not None:
        ax.set_xlim(*spec.x_range)
    ax.grid(True, alpha=0.4)
    ax.legend()


def _save(fig, spec: PlotSpec):
    if spec.deterministic:
        plt.rcParams["svg.hashsalt"] = HASH_SALT
        metadata = {"Date": None} if spec.output.endswith(".svg") else {"CreationDate": None}
        fig.savefig(spec.output, metadata=metadata)
    else:
        fig.savefig(spec.output)
    plt.close(fig)


def render_cdf_plot(spec: PlotSpec) -> RenderResult:
    """Render all curves of a spec into one set of axes."""
    curves = load_curves(spec)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    _draw_panel(ax, curves, spec)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    _save(fig, spec)
    return RenderResult(output=spec.output, panels=[[c.label for c in curves]])


def render_comparison_grid(specs, output: str, auto_range: bool = False) -> RenderResult:
    """Side-by-side panels, one per spec; degenerates to a single plot."""
    specs = list(specs)
    if not specs:
        raise ValueError("at least one plot spec is required")
    if len(specs) == 1:
        solo = PlotSpec(
            inputs=specs[0].inputs, output=output, labels=specs[0].labels,
            x_range=specs[0].x_range, y_range=specs[0].y_range,
            median_lines=specs[0].median_lines, title=specs[0].title,
            deterministic=specs[0].deterministic,
        )
        return render_cdf_plot(solo)
    panel_curves = [load_curves(spec) for spec in specs]
    if auto_range:
        top = max(c.values[-1] for curves in panel_curves for c in curves)
        shared = (0.0, float(top))
    fig, axes = plt.subplots(1, len(specs), figsize=(5.4 * len(specs), 4.2))
    for ax, spec, curves in zip(axes, specs, panel_curves):
        draw_spec = spec if not auto_range else PlotSpec(
            inputs=spec.inputs, output=output, labels=spec.labels, x_range=shared,
            y_range=spec.y_range, median_lines=spec.median_lines,
            title=spec.title, deterministic=spec.deterministic,
        )
        _draw_panel(ax, curves, draw_spec)
        if spec.title:
            ax.set_title(spec.title)
    fig.tight_layout()
    merged = PlotSpec(
        inputs=specs[0].inputs, output=output,
        deterministic=any(spec.deterministic for spec in specs),
    )
    _save(fig, merged)
    return RenderResult(output=output, panels=[[c.label for c in curves] for curves in panel_curves])
