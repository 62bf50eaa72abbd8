"""Command line for rendering ccfsim CDF CSVs into figures.

Overlay mode draws every curve of every input into one plot; ``--grid`` puts
each input CSV into its own side-by-side panel. Exit codes: 0 success,
1 rendering/validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .plotting import PlotSpec, render_cdf_plot, render_comparison_grid


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccfsim-figures",
        description="Render CDF-versus-spectral-efficiency figures from ccfsim CSV output",
    )
    parser.add_argument("inputs", nargs="+", help="cdf CSV files (controller,se_value,cdf_prob)")
    parser.add_argument("--out", required=True, help="output image path (.svg/.pdf/.png)")
    parser.add_argument("--labels", default=None, help="comma-separated curve labels to plot")
    parser.add_argument("--grid", action="store_true", help="one panel per input CSV")
    parser.add_argument("--titles", default=None, help="comma-separated panel titles (grid mode)")
    parser.add_argument("--median-lines", action="store_true", help="mark each curve's median")
    parser.add_argument("--x-range", default=None, help="x axis range as LO:HI")
    parser.add_argument("--auto-range", action="store_true", help="unify panel x ranges (grid mode)")
    parser.add_argument(
        "--deterministic", action="store_true",
        help="byte-reproducible vector output (fixed hash salt, no timestamps)",
    )
    return parser


def _parse_range(text):
    if text is None:
        return None
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise ValueError(f"expected LO:HI for --x-range, got {text!r}") from None
    return (lo, hi)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(sys.argv[1:] if argv is None else argv)
    labels = tuple(ns.labels.split(",")) if ns.labels else None
    titles = ns.titles.split(",") if ns.titles else None
    try:
        x_range = _parse_range(ns.x_range)
        if ns.grid:
            specs = [
                PlotSpec(
                    inputs=(path,), output=ns.out, labels=labels, x_range=x_range,
                    median_lines=ns.median_lines, deterministic=ns.deterministic,
                    title=titles[i] if titles else None,
                )
                for i, path in enumerate(ns.inputs)
            ]
            result = render_comparison_grid(specs, ns.out, auto_range=ns.auto_range)
        else:
            spec = PlotSpec(
                inputs=tuple(ns.inputs), output=ns.out, labels=labels, x_range=x_range,
                median_lines=ns.median_lines, deterministic=ns.deterministic,
            )
            result = render_cdf_plot(spec)
    except Exception as exc:
        print(f"ccfsim-figures: error: {exc}", file=sys.stderr)
        return 1
    curve_counts = ",".join(str(len(panel)) for panel in result.panels)
    print(f"wrote {result.output} ({curve_counts} curve(s) per panel)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
