"""Training-report persistence and figure rendering.

Reports live as JSON lines ({step, loss, lr, tokens_seen}); metric results
as JSON lines of MetricReport.to_json().  The render functions draw PNGs
with matplotlib's file-only backend, for the CLI to place alongside its
tab-delimited summaries.
"""

from __future__ import annotations

import json

from .errors import InputError
from .training import TrainingReport


def save_report(report: TrainingReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in report.records():
            fh.write(json.dumps(record) + "\n")


def load_report(path: str) -> TrainingReport:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as err:
                raise InputError(f"{path}:{lineno}: malformed JSON ({err.msg})") from None
    if not records:
        raise InputError(f"no records in {path}")
    try:
        return TrainingReport.from_records(records)
    except (KeyError, TypeError, ValueError):
        raise InputError(f"{path}: records lack step/loss/lr/tokens_seen fields") from None


def append_result(result: dict, path: str) -> None:
    """Append one metric result as a single atomic line write."""
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(result) + "\n")


def load_results(path: str) -> list[dict]:
    results = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                results.append(json.loads(line))
            except json.JSONDecodeError as err:
                raise InputError(f"{path}:{lineno}: malformed JSON ({err.msg})") from None
    return results


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_loss_curve(report: TrainingReport, out_path: str) -> None:
    """Loss over steps, with the learning-rate schedule on a second axis."""
    if not report.steps:
        raise InputError("cannot render an empty training report")
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(report.steps, report.losses, color="tab:blue", linewidth=1.2)
    ax.set_xlabel("step")
    ax.set_ylabel("training loss", color="tab:blue")
    ax.grid(True, alpha=0.3)
    ax2 = ax.twinx()
    ax2.plot(report.steps, report.lrs, color="tab:orange", linewidth=0.9, alpha=0.8)
    ax2.set_ylabel("learning rate", color="tab:orange")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_metrics_chart(results: list[dict], out_path: str) -> None:
    """Horizontal bar chart of metric values in [0, 1]."""
    if not results:
        raise InputError("no metric results to render")
    plt = _plt()
    labels = [str(r.get("metric", "?")) for r in results]
    values = [float(r.get("value", 0.0)) for r in results]
    fig, ax = plt.subplots(figsize=(7, 0.6 * len(results) + 1.4))
    ax.barh(range(len(results)), values, color="tab:blue")
    ax.set_yticks(range(len(results)), labels)
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("value")
    ax.invert_yaxis()
    ax.grid(True, axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def report_table(report: TrainingReport) -> str:
    """Tab-delimited step table, header row first."""
    lines = ["step\tloss\tlr\ttokens_seen"]
    for rec in report.records():
        lines.append(f"{rec['step']}\t{rec['loss']:.6f}\t{rec['lr']:.3e}\t{rec['tokens_seen']}")
    return "\n".join(lines)


def results_table(results: list[dict]) -> str:
    """Tab-delimited metric table, header row first."""
    lines = ["metric\tvalue\tsample_count"]
    for r in results:
        lines.append(
            f"{r.get('metric', '?')}\t{float(r.get('value', 0.0)):.6f}\t{r.get('sample_count', 0)}"
        )
    return "\n".join(lines)
