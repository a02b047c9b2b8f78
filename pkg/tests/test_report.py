from io import StringIO

from rich.console import Console

from hicom.models import AblationRow, MetricsReport, PerturbationRow
from hicom.pipeline.report import audit_table, plot_ablation, plot_degradation, print_report


def sample_report(perturbed=True) -> MetricsReport:
    rows = [
        AblationRow("M1", ["M1"], 0.7, 0.72, 0.4, None, 0.5),
        AblationRow("M1+M2", ["M1", "M2"], 0.8, 0.85, 0.55, 0.6, 0.75),
    ]
    perturbations = [
        PerturbationRow("color_manipulation", 3, "M1+M2", 0.75, 0.5, 0.05, 0.05),
        PerturbationRow("image_corruption", 3, "M1+M2", 0.6, 0.3, 0.2, 0.25),
    ] if perturbed else []
    return MetricsReport(
        FAC=0.8, FAU=0.85, FCAC=0.55, FCAU=0.6, n_faces=40, n_frames=10,
        ablation=rows, perturbations=perturbations,
        anomaly_recall={"gaze_outlier": {"M1": 0.0, "M1+M2": 0.5}},
    )


def test_report_json(tmp_path):
    report = sample_report()
    report.save(tmp_path / "report.json")
    loaded = MetricsReport.load(tmp_path / "report.json")
    assert loaded == report
    assert loaded.ablation[0].FCAU is None


def test_print_report():
    buffer = StringIO()
    print_report(sample_report(), Console(file=buffer, width=160))
    out = buffer.getvalue()
    assert "M1+M2" in out
    assert "n/a" in out
    assert "gaze_outlier" in out
    assert "image_corruption" in out


def test_plots(tmp_path):
    report = sample_report()
    assert plot_ablation(report, tmp_path / "plots" / "ablation.png").stat().st_size > 0
    assert plot_degradation(report, tmp_path / "plots" / "degradation.png").exists()
    assert plot_degradation(sample_report(perturbed=False), tmp_path / "none.png") is None


def test_audit_table():
    audit = {
        "master_seed": 3,
        "splits": {
            "train": {
                "clips": 8,
                "real_clips": 3,
                "anomaly_kinds": {"motion_jitter": 2, "gaze_outlier": 1},
                "n_faces": {"2": 1, "3": 7},
                "sha256": "ab" * 32,
            }
        },
    }
    buffer = StringIO()
    Console(file=buffer, width=200).print(audit_table(audit))
    out = buffer.getvalue()
    assert "seed 3" in out
    assert "gaze_outlier=1" in out
    assert "abababababab" in out
