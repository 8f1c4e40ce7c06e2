#!/usr/bin/env python3
"""Render the replicated Bayes-factor comparison as one boxplot per method.

Reads the estimator-comparison CSV written by the sdlab harness (documented
schema: method,replica,seed,iters,burnin,bf_estimate,log_bf,rb_term,
ratio_term,coherence_stat,elapsed_ms,status) and draws the methods in the
fixed order IS, Chib, Bridge, MR, VW.  Failed rows are excluded from the
boxes and counted in the annotation.  ``--stats`` prints the per-method
medians exactly as plotted, for checking the figure against the data.
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

EXPECTED_HEADER = [
    "method", "replica", "seed", "iters", "burnin", "bf_estimate", "log_bf",
    "rb_term", "ratio_term", "coherence_stat", "elapsed_ms", "status",
]

# display order and labels for the five estimators
METHOD_ORDER = [("is", "IS"), ("chib", "Chib"), ("bridge", "Bridge"), ("mr", "MR"), ("vw", "VW")]
KNOWN_METHODS = {key for key, _ in METHOD_ORDER}


class TableError(ValueError):
    """The CSV does not match the harness schema or holds no usable rows."""


class ReplicateTable:
    """Per-method Bayes-factor estimates parsed from the harness CSV."""

    def __init__(self, values_by_method, excluded):
        self.values_by_method = values_by_method
        self.excluded = excluded

    @property
    def methods(self):
        return [key for key, _ in METHOD_ORDER if key in self.values_by_method]

    def medians(self):
        return {m: float(np.median(self.values_by_method[m])) for m in self.methods}

    def replicate_count(self):
        return max(len(v) for v in self.values_by_method.values())


def parse_replicate_table(csv_path):
    path = Path(csv_path)
    if not path.exists():
        raise TableError(f"{path}: file not found")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise TableError(f"{path}: empty file") from None
        if header != EXPECTED_HEADER:
            raise TableError(f"{path}: header does not match the harness schema")
        values = {}
        excluded = 0
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(EXPECTED_HEADER):
                raise TableError(f"{path} line {lineno}: expected {len(EXPECTED_HEADER)} fields")
            record = dict(zip(EXPECTED_HEADER, row))
            method = record["method"]
            if method not in KNOWN_METHODS:
                raise TableError(f"{path} line {lineno}: unknown method {method!r}")
            if record["status"] != "ok":
                excluded += 1
                continue
            try:
                value = float(record["bf_estimate"])
            except ValueError:
                raise TableError(f"{path} line {lineno}: bad bf_estimate") from None
            values.setdefault(method, []).append(value)
    if not values:
        raise TableError(f"{path}: no usable rows (all missing or failed)")
    return ReplicateTable(values, excluded)


def render_boxplot(csv_path, out_image_path, svg=False):
    """Draw one box per method and write the image; returns the table used."""
    table = parse_replicate_table(csv_path)
    labels = [label for key, label in METHOD_ORDER if key in table.values_by_method]
    data = [table.values_by_method[m] for m in table.methods]

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.boxplot(data, tick_labels=labels)
    ax.set_ylabel("Bayes factor estimate")
    note = f"{table.replicate_count()} replicates per method"
    if table.excluded:
        note += f", {table.excluded} failed row(s) excluded"
    ax.set_title(f"Bayes factor approximations ({note})")
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(out_image_path, dpi=150, format="svg" if svg else None)
    plt.close(fig)
    return table


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", help="estimator-comparison CSV from the harness")
    parser.add_argument("out", help="output image path (PNG at 150 dpi by default)")
    parser.add_argument("--svg", action="store_true", help="write SVG instead of PNG")
    parser.add_argument(
        "--stats", action="store_true",
        help="print per-method medians (method, median, rows, excluded-total)",
    )
    args = parser.parse_args(argv)
    try:
        table = render_boxplot(args.csv, args.out, svg=args.svg)
    except TableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.stats:
        for method, median in table.medians().items():
            rows = len(table.values_by_method[method])
            print(f"{method} {median:.17g} {rows} {table.excluded}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
