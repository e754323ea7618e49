"""Report rendering: JSON/TSV artifacts plus matplotlib figures written next to them."""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def write_training_report(logs: dict, outdir, stem: str = "training") -> dict:
    """Training curves per channel: JSONL log plus loss/DTW figures.

    logs maps a channel name (language tag or stage) to a TrainingLog. The
    JSONL file carries one record per epoch including the sampling
    distribution snapshot; wall_ms makes it diagnostic output, not a
    reproducible artifact.
    """
    os.makedirs(outdir, exist_ok=True)
    jsonl_path = os.path.join(outdir, f"{stem}_log.jsonl")
    with open(jsonl_path, "w", encoding="utf-8") as fh:
        for name in sorted(logs):
            for record in logs[name].records:
                row = {"channel": name}
                row.update(record.as_dict())
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for name in sorted(logs):
        records = logs[name].records
        axes[0].plot([r.epoch for r in records], [r.mean_loss for r in records], label=name)
        curve = logs[name].dtw_curve()
        if curve:
            axes[1].plot([e for e, _ in curve], [d for _, d in curve], marker="o", label=name)
    axes[0].set_xlabel("epoch")
    axes[0].set_ylabel("mean loss")
    axes[0].set_yscale("log")
    axes[0].legend()
    axes[1].set_xlabel("epoch")
    axes[1].set_ylabel("dev DTW")
    axes[1].legend()
    fig.tight_layout()
    figure_path = os.path.join(outdir, f"{stem}_curves.png")
    _save(fig, figure_path)
    return {"log": jsonl_path, "figure": figure_path}


def write_score_report(report, per_clip: list, outdir, stem: str = "report") -> dict:
    """Evaluation artifacts: JSON summary, per-clip TSV, and a score figure."""
    os.makedirs(outdir, exist_ok=True)
    json_path = os.path.join(outdir, f"{stem}.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")

    tsv_path = os.path.join(outdir, f"{stem}_per_clip.tsv")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("id\tlanguage\tbleu_1\trouge\tdtw\treference\tdecoded\n")
        for row in per_clip:
            fh.write(
                "\t".join(
                    [
                        row["id"],
                        row["language"],
                        f"{row['bleu_1']:.6f}",
                        f"{row['rouge']:.6f}",
                        f"{row['dtw']:.6f}",
                        row["reference"],
                        row["decoded"],
                    ]
                )
                + "\n"
            )

    summary = report.as_dict()
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    names = ["bleu_1", "bleu_2", "bleu_3", "bleu_4", "rouge"]
    axes[0].bar(names, [summary[n] for n in names])
    axes[0].set_ylim(0.0, 1.05)
    axes[0].set_ylabel("score")
    axes[0].tick_params(axis="x", rotation=45)
    axes[1].hist([row["dtw"] for row in per_clip], bins=20)
    axes[1].set_xlabel("per-clip DTW")
    axes[1].set_ylabel("clips")
    fig.tight_layout()
    figure_path = os.path.join(outdir, f"{stem}_scores.png")
    _save(fig, figure_path)
    return {"json": json_path, "tsv": tsv_path, "figure": figure_path}
