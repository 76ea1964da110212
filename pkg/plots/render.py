#!/usr/bin/env python3
"""Render charts from experiment-harness CSV files.

Read-only consumer of the harness output: every number plotted comes
straight from the CSV, the script only groups rows into curves and
attaches error bars.  Usage:

    python3 plots/render.py --csv results.csv --kind rate-vs-snr --out fig.png

Chart kinds:

- rate-vs-snr: one curve per (scheme, rate metric) pair, so the
  spectral-efficiency sweep yields four curves.
- optimal-size: step plot of the best surface size against SNR.
- mse-vs-snr: error variance against SNR on a log scale.
- recovery-vs-pilots: exact-recovery rate against the pilot budget.

Exit codes: 0 on success, 2 for unusable input (missing file, schema
mismatch, empty body, bad arguments).
"""

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXPECTED_COLUMNS = ("experiment", "scheme", "snr_db", "N", "T", "J",
                    "metric_name", "metric_value", "std_error", "trials",
                    "seed")


@dataclass(frozen=True)
class ChartSpec:
    csv_path: Path
    kind: str
    out_path: Path
    x_field: str
    group_fields: tuple
    xlabel: str
    ylabel: str
    logy: bool = False
    step: bool = False


_KINDS = {
    "rate-vs-snr": dict(x_field="snr_db", group_fields=("scheme", "metric_name"),
                        xlabel="SNR (dB)", ylabel="rate (bits/s/Hz)"),
    "optimal-size": dict(x_field="snr_db", group_fields=("scheme",),
                         xlabel="SNR (dB)", ylabel="best surface size N*",
                         step=True),
    "mse-vs-snr": dict(x_field="snr_db", group_fields=("scheme",),
                       xlabel="SNR (dB)", ylabel="per-entry error variance",
                       logy=True),
    "recovery-vs-pilots": dict(x_field="J", group_fields=("scheme", "snr_db"),
                               xlabel="pilot slots", ylabel="exact recovery rate"),
}


def make_spec(kind: str, csv_path: str, out_path: str) -> ChartSpec:
    return ChartSpec(csv_path=Path(csv_path), kind=kind,
                     out_path=Path(out_path), **_KINDS[kind])


def read_records(path: Path) -> list:
    """Rows as dicts, after checking the header carries every known column."""
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in EXPECTED_COLUMNS if c not in header]
        if missing:
            raise SchemaError("missing columns: " + ", ".join(missing))
        return list(reader)


class SchemaError(Exception):
    pass


def group_rows(rows: list, spec: ChartSpec) -> dict:
    """Curves keyed by label: {label: (x array, y array, yerr array-or-None)}.

    Labels only mention group fields that actually vary across the file,
    so a single-SNR recovery sweep is labeled by algorithm alone.
    """
    varying = [f for f in spec.group_fields
               if len({row[f] for row in rows}) > 1]
    if not varying:
        varying = [spec.group_fields[0]]
    groups = {}
    for row in rows:
        label = ", ".join(row[f] for f in varying)
        groups.setdefault(label, []).append(row)

    curves = {}
    for label, members in sorted(groups.items()):
        members.sort(key=lambda row: float(row[spec.x_field]))
        xs = [float(row[spec.x_field]) for row in members]
        ys = [float(row["metric_value"]) for row in members]
        errs = [float(row["std_error"]) if row["std_error"] else None
                for row in members]
        yerr = errs if all(e is not None for e in errs) else None
        curves[label] = (xs, ys, yerr)
    return curves


def render(spec: ChartSpec):
    rows = read_records(spec.csv_path)
    if not rows:
        raise SchemaError("CSV has a header but no data rows")
    bad = [row[spec.x_field] for row in rows if not row[spec.x_field]]
    if bad:
        raise SchemaError(f"column {spec.x_field!r} is empty in "
                          f"{len(bad)} rows; wrong chart kind for this CSV?")
    curves = group_rows(rows, spec)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, (xs, ys, yerr) in curves.items():
        if spec.step:
            ax.step(xs, ys, where="post", marker="o", label=label)
        elif yerr is not None:
            ax.errorbar(xs, ys, yerr=yerr, marker="o", capsize=3, label=label)
        else:
            ax.plot(xs, ys, marker="o", label=label)
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render a chart from an experiment CSV.")
    parser.add_argument("--csv", required=True, help="input CSV path")
    parser.add_argument("--kind", required=True, choices=sorted(_KINDS),
                        help="chart kind")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    spec = make_spec(args.kind, args.csv, args.out)
    try:
        render(spec)
    except FileNotFoundError:
        print(f"error: no such file: {spec.csv_path}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {spec.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
