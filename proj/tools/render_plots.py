#!/usr/bin/env python3
"""Render a plot-spec JSON (emitted by `optiwing_cli analyze`/`evaluate`).

Usage: render_plots.py SPEC.plot.json [OUT.png]
"""
import csv
import json
import sys
from pathlib import Path


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__)
        return 2
    spec_path = Path(sys.argv[1])
    spec = json.loads(spec_path.read_text())
    csv_path = spec_path.parent / spec["csv"]

    rows = list(csv.DictReader(csv_path.open()))
    if not rows:
        print(f"no rows in {csv_path}")
        return 1

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for series in spec["series"]:
        x = [float(r[series["x"]]) for r in rows]
        y = [float(r[series["y"]]) for r in rows]
        ax.plot(x, y, marker="o", markersize=3, label=series["y"])
    ax.set_title(spec.get("title", ""))
    ax.set_xlabel(spec.get("xlabel", ""))
    ax.set_ylabel(spec.get("ylabel", ""))
    ax.grid(True, alpha=0.3)
    ax.legend()

    out = Path(sys.argv[2]) if len(sys.argv) > 2 else spec_path.with_suffix(".png")
    fig.tight_layout()
    fig.savefig(out, dpi=140)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
