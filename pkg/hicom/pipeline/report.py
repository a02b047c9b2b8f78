"""Report rendering: rich tables for the console, matplotlib figures on disk."""

from pathlib import Path
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from rich.console import Console  # noqa: E402
from rich.table import Table  # noqa: E402

from hicom.models import MetricsReport  # noqa: E402

METRICS = ("FAC", "FAU", "FCAC", "FCAU")


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def ablation_table(report: MetricsReport) -> Table:
    table = Table(title=f"Ablation ({report.n_faces} faces, {report.n_frames} frames)")
    table.add_column("Modules", style="cyan")
    for metric in METRICS + ("fake recall",):
        table.add_column(metric, justify="right")
    for row in report.ablation:
        table.add_row(row.name, *(_fmt(getattr(row, m)) for m in METRICS), _fmt(row.fake_recall))
    return table


def anomaly_table(report: MetricsReport) -> Table:
    table = Table(title="Recall per anomaly kind")
    table.add_column("Anomaly", style="cyan")
    rows = [row.name for row in report.ablation]
    for name in rows:
        table.add_column(name, justify="right")
    for kind, per_row in sorted(report.anomaly_recall.items()):
        table.add_row(kind, *(_fmt(per_row.get(name)) for name in rows))
    return table


def degradation_table(report: MetricsReport) -> Table:
    table = Table(title="Perturbation degradation")
    for column in ("Perturbation", "Severity", "Modules", "FAC", "FAC drop", "FCAC", "FCAC drop"):
        table.add_column(column, justify="left" if column in ("Perturbation", "Modules") else "right")
    for row in report.perturbations:
        table.add_row(
            row.kind, str(row.severity), row.row, _fmt(row.FAC), _fmt(row.FAC_drop), _fmt(row.FCAC), _fmt(row.FCAC_drop)
        )
    return table


def audit_table(audit: dict) -> Table:
    table = Table(title=f"Dataset audit (seed {audit['master_seed']})")
    table.add_column("Split", style="cyan")
    table.add_column("Clips", justify="right")
    table.add_column("Real", justify="right")
    table.add_column("Anomaly kinds")
    table.add_column("Faces per clip")
    table.add_column("sha256")
    for split, info in audit["splits"].items():
        kinds = ", ".join(f"{k}={v}" for k, v in sorted(info["anomaly_kinds"].items()))
        faces = " ".join(f"{n}:{c}" for n, c in info["n_faces"].items())
        table.add_row(split, str(info["clips"]), str(info["real_clips"]), kinds, faces, info["sha256"][:12])
    return table


def print_report(report: MetricsReport, console: Optional[Console] = None) -> None:
    console = console or Console()
    console.print(ablation_table(report))
    if report.anomaly_recall:
        console.print(anomaly_table(report))
    if report.perturbations:
        console.print(degradation_table(report))


def plot_ablation(report: MetricsReport, path: Path) -> Path:
    """Grouped bars: one group per metric, one bar per ablation row."""
    fig, ax = plt.subplots(figsize=(8, 4))
    n_rows = max(len(report.ablation), 1)
    width = 0.8 / n_rows
    for k, row in enumerate(report.ablation):
        values = [getattr(row, m) or 0.0 for m in METRICS]
        positions = [i + k * width for i in range(len(METRICS))]
        ax.bar(positions, values, width=width, label=row.name)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(METRICS))])
    ax.set_xticklabels(METRICS)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("score")
    ax.legend(loc="lower right", fontsize="small")
    ax.set_title("Metrics per module stack")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_degradation(report: MetricsReport, path: Path) -> Optional[Path]:
    """FAC against severity, one panel per perturbation kind."""
    if not report.perturbations:
        return None
    curves: Dict[str, Dict[str, List[tuple]]] = {}
    clean = {row.name: row.FAC for row in report.ablation}
    for row in report.perturbations:
        curves.setdefault(row.kind, {}).setdefault(row.row, []).append((row.severity, row.FAC))

    fig, axes = plt.subplots(1, len(curves), figsize=(3.2 * len(curves), 3.2), sharey=True, squeeze=False)
    for ax, (kind, rows) in zip(axes[0], sorted(curves.items())):
        for name, points in rows.items():
            points = sorted([(0, clean[name])] + points)
            ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=name)
        ax.set_title(kind.replace("_", " "), fontsize="small")
        ax.set_xlabel("severity")
    axes[0][0].set_ylabel("FAC")
    axes[0][-1].legend(fontsize="x-small")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
