"""Report emission: versioned JSON aggregates, CSV series and figures.

JSON and CSV outputs are byte-deterministic for a given report (floats are
written in shortest round-trip form, keys are sorted). Figures are rendered
next to the delimited files unless disabled.
"""

from __future__ import annotations

import csv
import json
import os

from .simulator import BETA_BINS, ComparisonReport, SimulationReport, COMPARISON_METRICS

SCHEMA_VERSION = 1


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def report_json(report: SimulationReport) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "scenario": report.scenario.describe(),
        "aggregates": report.aggregates,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_series_csv(report: SimulationReport, path: str) -> None:
    keys = list(report.series)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + keys)
        for t in range(len(report.series[keys[0]])):
            writer.writerow([t] + [_fmt(report.series[k][t]) for k in keys])


def write_histogram_csv(report: SimulationReport, path: str) -> None:
    ladder = report.scenario.model.ladder
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta_bin_low", "beta_bin_high", "f_ghz", "count"])
        for b in range(report.histogram.shape[0]):
            low, high = b / BETA_BINS, (b + 1) / BETA_BINS
            for q in range(report.histogram.shape[1]):
                writer.writerow(
                    [_fmt(low), _fmt(high), _fmt(ladder.frequencies[q]),
                     int(report.histogram[b, q])]
                )


def write_report(
    report: SimulationReport, outdir: str, prefix: str = "", figures: bool = True
) -> list[str]:
    """Write report.json, series.csv, histogram.csv and figures; return paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    json_path = os.path.join(outdir, f"{prefix}report.json")
    with open(json_path, "w") as fh:
        fh.write(report_json(report))
    paths.append(json_path)
    series_path = os.path.join(outdir, f"{prefix}series.csv")
    write_series_csv(report, series_path)
    paths.append(series_path)
    hist_path = os.path.join(outdir, f"{prefix}histogram.csv")
    write_histogram_csv(report, hist_path)
    paths.append(hist_path)
    if figures:
        from . import plots

        fig_path = os.path.join(outdir, f"{prefix}series.png")
        plots.save_series_figure(report, fig_path)
        paths.append(fig_path)
        hist_fig = os.path.join(outdir, f"{prefix}histogram.png")
        plots.save_histogram_figure(report, hist_fig)
        paths.append(hist_fig)
    return paths


def comparison_json(cmp: ComparisonReport) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "baseline": cmp.baseline,
        "controllers": list(cmp.reports),
        "absolute": cmp.absolute,
        "normalized": cmp.normalized,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def comparison_table(cmp: ComparisonReport) -> str:
    """Plain-text table of absolute and baseline-normalised aggregates."""
    controllers = list(cmp.reports)
    lines = []
    header = f"{'metric':<22}" + "".join(f"{c:>14}" for c in controllers)
    lines.append(header)
    for metric in COMPARISON_METRICS:
        row = f"{metric:<22}" + "".join(
            f"{cmp.absolute[c][metric]:>14.4f}" for c in controllers
        )
        lines.append(row)
    lines.append(f"normalised to {cmp.baseline}:")
    for metric in COMPARISON_METRICS:
        row = f"{metric:<22}" + "".join(
            f"{cmp.normalized[c][metric]:>14.6f}" for c in controllers
        )
        lines.append(row)
    return "\n".join(lines)


def write_comparison(
    cmp: ComparisonReport, outdir: str, figures: bool = True
) -> list[str]:
    """Write comparison.json/.csv, per-controller reports and the figure."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    json_path = os.path.join(outdir, "comparison.json")
    with open(json_path, "w") as fh:
        fh.write(comparison_json(cmp))
    paths.append(json_path)
    csv_path = os.path.join(outdir, "comparison.csv")
    controllers = list(cmp.reports)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["metric"] + controllers + [f"{c}_normalized" for c in controllers]
        )
        for metric in COMPARISON_METRICS:
            writer.writerow(
                [metric]
                + [_fmt(cmp.absolute[c][metric]) for c in controllers]
                + [_fmt(cmp.normalized[c][metric]) for c in controllers]
            )
    paths.append(csv_path)
    for name, report in cmp.reports.items():
        paths.extend(write_report(report, outdir, prefix=f"{name}_", figures=figures))
    if figures:
        from . import plots

        fig_path = os.path.join(outdir, "comparison.png")
        plots.save_comparison_figure(cmp, fig_path)
        paths.append(fig_path)
    return paths
