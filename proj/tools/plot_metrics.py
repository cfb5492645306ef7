#!/usr/bin/env python3
"""Renders exploitability curves from one or more run directories.

Usage: plot_metrics.py RUN_DIR [RUN_DIR ...] [-o out.png]

Looks for exploitability_sd.csv, exploitability_avgnet.csv, and
exploitability.csv in each directory and plots e_total_mA over iterations
on log-log axes.
"""

import argparse
import csv
import pathlib
import sys


def read_curve(path):
    iterations, values = [], []
    with open(path) as f:
        for row in csv.DictReader(f):
            iterations.append(int(row["iteration"]))
            values.append(float(row["e_total_mA"]))
    return iterations, values


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("runs", nargs="+", type=pathlib.Path)
    parser.add_argument("-o", "--out", default="exploitability.png")
    args = parser.parse_args()

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        sys.exit("matplotlib is required for plotting (pip install matplotlib)")

    fig, ax = plt.subplots(figsize=(7, 5))
    for run in args.runs:
        for name, label in [
            ("exploitability_sd.csv", "SD-CFR"),
            ("exploitability_avgnet.csv", "Deep CFR"),
            ("exploitability.csv", "tabular"),
        ]:
            path = run / name
            if not path.exists():
                continue
            xs, ys = read_curve(path)
            ax.plot(xs, ys, label=f"{run.name} {label}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("Algorithm Iterations")
    ax.set_ylabel("Exploitability in mA/g")
    ax.grid(True, which="both", lw=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
