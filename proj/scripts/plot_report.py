#!/usr/bin/env python3
"""Render a carbonci simulation report as a PNG.

Reads summary.csv and series_long.csv from a report directory (as written by
`carbonci simulate`) and draws cumulative emissions over time per strategy
next to the final totals.

Usage:
    python3 scripts/plot_report.py report/
    python3 scripts/plot_report.py report/ -o comparison.png
"""

import argparse
import csv
from datetime import datetime
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_series(path: Path):
    """strategy -> (timestamps, cumulative emissions)."""
    series: dict[str, tuple[list, list]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            stamps, values = series.setdefault(row["strategy"], ([], []))
            stamps.append(datetime.fromisoformat(row["timestamp"].replace("Z", "+00:00")))
            values.append(float(row["cumulative_emissions_reu"]))
    return series


def read_summary(path: Path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("report_dir", type=Path, help="directory written by `carbonci simulate`")
    parser.add_argument("-o", "--out", type=Path, default=None,
                        help="output image path (default: <report_dir>/report.png)")
    args = parser.parse_args()

    series = read_series(args.report_dir / "series_long.csv")
    summary = read_summary(args.report_dir / "summary.csv")
    out = args.out or args.report_dir / "report.png"

    fig, (ax_time, ax_total) = plt.subplots(1, 2, figsize=(13, 5), width_ratios=[2, 1])

    for strategy, (stamps, values) in series.items():
        ax_time.plot(stamps, values, drawstyle="steps-post", label=strategy, linewidth=1.4)
    ax_time.set_title("Cumulative emissions")
    ax_time.set_ylabel("REU (gCO2-eq at 1 kW)")
    ax_time.legend(fontsize=8)
    ax_time.grid(alpha=0.3)
    fig.autofmt_xdate()

    labels = [row["strategy"] for row in summary]
    totals = [float(row["total_reu"]) for row in summary]
    bars = ax_total.bar(labels, totals, color="tab:green")
    for bar, row in zip(bars, summary):
        pct = float(row["improvement_pct"])
        ax_total.annotate(f"-{pct:.1f}%" if pct > 0 else "baseline",
                          (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                          ha="center", va="bottom", fontsize=8)
    ax_total.set_title("Total emissions by strategy")
    ax_total.tick_params(axis="x", rotation=30)
    ax_total.grid(alpha=0.3, axis="y")

    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
