"""Delimited report files and the matplotlib figures rendered next to them.

All writers go through an atomic write-temp-then-rename so partially
written artifacts never appear under the final name, and float fields use
repr so reports are byte-stable across runs with the same seed.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .corpus import PairCategory
from .evaluate import EvalReport, SaliencyComparison
from .ranking import RankingTable

_FIG_DPI = 120


def atomic_write_text(path: str, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def atomic_savefig(fig, path: str):
    tmp = f"{path}.tmp.png"
    fig.savefig(tmp, dpi=_FIG_DPI, metadata={"Software": "facerank"})
    plt.close(fig)
    os.replace(tmp, path)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_json(doc: dict, path: str):
    atomic_write_text(path, json.dumps(doc, indent=1) + "\n")


# ---------------------------------------------------------------------------
# eval report
# ---------------------------------------------------------------------------


def eval_report_csv(report: EvalReport) -> str:
    cats = [c.value for c in PairCategory]
    header = ["method", "available", "weighted_accuracy_mean", "weighted_accuracy_std", "mse_mean", "mse_std"]
    for c in cats:
        header += [f"acc_{c}_weighted", f"acc_{c}_unweighted", f"n_{c}"]
    lines = [",".join(header)]
    for row in report.rows:
        cells = [
            row.method,
            "yes" if row.available else "no",
            _fmt(row.weighted_accuracy.mean if row.weighted_accuracy else None),
            _fmt(row.weighted_accuracy.std if row.weighted_accuracy else None),
            _fmt(row.mse.mean if row.mse else None),
            _fmt(row.mse.std if row.mse else None),
        ]
        for c in cats:
            ca = row.categories.get(c)
            cells += [
                _fmt(ca.weighted if ca else None),
                _fmt(ca.unweighted if ca else None),
                _fmt(ca.count if ca else None),
            ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_eval_report(report: EvalReport, out_dir: str, stem: str = "report"):
    """report.csv, report.json and report.png under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    atomic_write_text(csv_path, eval_report_csv(report))
    write_json(report.to_dict(), os.path.join(out_dir, f"{stem}.json"))
    atomic_savefig(render_eval_figure(report), os.path.join(out_dir, f"{stem}.png"))
    return csv_path


def render_eval_figure(report: EvalReport):
    rows = [r for r in report.rows if r.available and r.weighted_accuracy is not None]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))

    names = [r.method for r in rows]
    means = [r.weighted_accuracy.mean for r in rows]
    stds = [r.weighted_accuracy.std for r in rows]
    ypos = np.arange(len(rows))
    ax1.barh(ypos, means, xerr=stds, color="#4878a8", ecolor="#333333", capsize=3)
    ax1.set_yticks(ypos)
    ax1.set_yticklabels(names)
    ax1.invert_yaxis()
    ax1.set_xlim(0.0, 1.0)
    ax1.set_xlabel("weighted accuracy")
    ax1.set_title("methods")

    cats = [c.value for c in PairCategory]
    width = 0.8 / max(len(rows), 1)
    xpos = np.arange(len(cats))
    for k, row in enumerate(rows):
        vals = [
            (row.categories.get(c).weighted if row.categories.get(c) else None) for c in cats
        ]
        vals = [v if v is not None else 0.0 for v in vals]
        ax2.bar(xpos + k * width, vals, width=width, label=row.method)
    ax2.set_xticks(xpos + 0.4 - width / 2)
    ax2.set_xticklabels(cats, rotation=15, ha="right")
    ax2.set_ylim(0.0, 1.0)
    ax2.set_ylabel("weighted accuracy")
    ax2.set_title("by pair category")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return fig


# ---------------------------------------------------------------------------
# saliency comparison
# ---------------------------------------------------------------------------


def confusion_csv(comparison: SaliencyComparison) -> str:
    cats = [c.value for c in PairCategory]
    lines = ["saliency_category," + ",".join(f"importance_{c}" for c in cats)]
    for sc in cats:
        lines.append(sc + "," + ",".join(str(comparison.confusion[sc][ic]) for ic in cats))
    return "\n".join(lines) + "\n"


def per_image_tau_csv(comparison: SaliencyComparison) -> str:
    lines = ["image_id,tau"]
    for image_id, tau in comparison.per_image:
        lines.append(f"{image_id},{_fmt(tau)}")
    return "\n".join(lines) + "\n"


def write_saliency_report(comparison: SaliencyComparison, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    atomic_write_text(os.path.join(out_dir, "confusion.csv"), confusion_csv(comparison))
    atomic_write_text(os.path.join(out_dir, "per_image_tau.csv"), per_image_tau_csv(comparison))
    write_json(comparison.to_dict(), os.path.join(out_dir, "saliency.json"))
    atomic_savefig(
        render_confusion_figure(comparison), os.path.join(out_dir, "confusion.png")
    )


def render_confusion_figure(comparison: SaliencyComparison):
    cats = [c.value for c in PairCategory]
    counts = np.array(
        [[comparison.confusion[sc][ic] for ic in cats] for sc in cats], dtype=np.float64
    )
    row_sums = counts.sum(axis=1, keepdims=True)
    shares = np.divide(counts, row_sums, out=np.zeros_like(counts), where=row_sums > 0)

    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    im = ax.imshow(shares, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(cats)))
    ax.set_xticklabels(cats, rotation=20, ha="right")
    ax.set_yticks(range(len(cats)))
    ax.set_yticklabels(cats)
    ax.set_xlabel("importance category")
    ax.set_ylabel("saliency category")
    ax.set_title(f"mean tau = {comparison.mean_tau:.4f} over {comparison.n_images} images")
    for r in range(len(cats)):
        for c in range(len(cats)):
            color = "white" if shares[r, c] > 0.5 else "black"
            ax.text(
                c,
                r,
                f"{shares[r, c] * 100:.1f}%\n({int(counts[r, c])})",
                ha="center",
                va="center",
                fontsize=8,
                color=color,
            )
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    return fig


# ---------------------------------------------------------------------------
# rankings and selections
# ---------------------------------------------------------------------------


def rankings_csv(tables: dict[str, RankingTable]) -> str:
    lines = ["group,item_id,rating,rank"]
    for group in sorted(tables):
        for entry in tables[group].entries:
            lines.append(f"{group},{entry.item_id},{_fmt(entry.rating)},{entry.rank}")
    return "\n".join(lines) + "\n"


def selections_csv(selections: dict[str, dict[str, tuple[str, str]]]) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "image_id", "face_id", "sentence"])
    for method in selections:
        for image_id in sorted(selections[method]):
            face_id, sentence = selections[method][image_id]
            writer.writerow([method, image_id, face_id, sentence])
    return buf.getvalue()
