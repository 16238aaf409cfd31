"""Result persistence: per-touch CSV, summary JSON, and rendered figures.

CSV and JSON writers are byte-stable functions of their inputs (floats use
``repr``/standard JSON formatting, keys are sorted), so identical sweeps
produce identical files.  Figures mirror the usual presentation of such
experiments: mean error curves per criterion over the touch count, and
box-and-whisker ADI distributions.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import TouchRecord

__all__ = ["CSV_HEADER", "write_touch_csv", "write_summary_json", "render_figures", "write_outputs"]

CSV_HEADER = (
    "run",
    "touch",
    "criterion",
    "action_id",
    "pos_err_m",
    "rot_err_geodesic_deg",
    "rot_err_euler_deg",
    "adi_m",
    "wall_s",
)

_METRIC_LABELS = {
    "pos_err_m": "position error [m]",
    "rot_err_geodesic_deg": "rotation error [deg]",
    "adi_m": "ADI [m]",
}


def write_touch_csv(records: list[TouchRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(
                [
                    rec.run,
                    rec.touch,
                    rec.criterion,
                    rec.action_id,
                    repr(rec.pos_err_m),
                    repr(rec.rot_err_geodesic_deg),
                    repr(rec.rot_err_euler_deg),
                    repr(rec.adi_m),
                    repr(rec.wall_s),
                ]
            )


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _group(records, key):
    out = {}
    for rec in records:
        out.setdefault(key(rec), []).append(rec)
    return out


def render_figures(records: list[TouchRecord], out_dir) -> list[str]:
    """Render mean-curve and ADI box plots as PNG files; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    by_criterion = _group(records, lambda r: r.criterion)
    criteria = sorted(by_criterion)

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for name in criteria:
        recs = by_criterion[name]
        touches = sorted({r.touch for r in recs})
        for ax, metric in zip(axes, _METRIC_LABELS):
            means = [
                float(sum(getattr(r, metric) for r in recs if r.touch == t))
                / max(1, sum(1 for r in recs if r.touch == t))
                for t in touches
            ]
            ax.plot(touches, means, marker="o", markersize=3, label=name)
    for ax, metric in zip(axes, _METRIC_LABELS):
        ax.set_xlabel("touch count")
        ax.set_ylabel(_METRIC_LABELS[metric])
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    curve_path = os.path.join(out_dir, "metrics_mean.png")
    fig.savefig(curve_path, dpi=150)
    plt.close(fig)
    paths.append(curve_path)

    fig, axes = plt.subplots(1, max(1, len(criteria)), figsize=(3.2 * max(1, len(criteria)), 3.6), squeeze=False)
    for ax, name in zip(axes[0], criteria):
        recs = by_criterion[name]
        touches = sorted({r.touch for r in recs})
        data = [[r.adi_m for r in recs if r.touch == t] for t in touches]
        ax.boxplot(data, positions=touches, widths=0.6)
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("touch count")
        ax.set_ylabel("ADI [m]")
        step = max(1, len(touches) // 8)
        ax.set_xticks(touches[::step])
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    box_path = os.path.join(out_dir, "adi_box.png")
    fig.savefig(box_path, dpi=150)
    plt.close(fig)
    paths.append(box_path)
    return paths


def write_outputs(records: list[TouchRecord], summary: dict, out_dir, make_figures: bool = True) -> dict:
    """Write touches.csv, summary.json, and (optionally) figures into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "touches.csv")
    json_path = os.path.join(out_dir, "summary.json")
    write_touch_csv(records, csv_path)
    write_summary_json(summary, json_path)
    out = {"csv": csv_path, "json": json_path, "figures": []}
    if make_figures:
        out["figures"] = render_figures(records, out_dir)
    return out
