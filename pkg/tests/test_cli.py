import json

import pytest

from hicom.__main__ import build_parser, main

TOML = """
profile = "desk"
seed = 2

[synth]
n_clips = 3
n_frames = 2
canvas = [128, 224]
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text(TOML)
    return path


def test_generate_then_refuse_rerun(tmp_path, config_file):
    out = tmp_path / "data"
    assert main(["--config", str(config_file), "generate", "--out", str(out)]) == 0
    audit = json.loads((out / "audit.json").read_text())
    assert audit["master_seed"] == 2
    assert audit["n_clips"] == 3
    assert main(["--config", str(config_file), "generate", "--out", str(out)]) == 1
    assert main(["--config", str(config_file), "generate", "--out", str(out), "--force", "--seed", "4"]) == 0
    assert json.loads((out / "audit.json").read_text())["master_seed"] == 4


def test_user_errors_exit_with_1(tmp_path, config_file):
    base = ["--config", str(config_file)]
    assert main(base + ["evaluate", "--out", str(tmp_path), "--modules", "M2"]) == 1
    assert main(base + ["evaluate", "--out", str(tmp_path), "--perturb", "high"]) == 1
    assert main(base + ["explain", "--out", str(tmp_path), "--llm"]) == 1
    assert main(base + ["explain", "--out", str(tmp_path), "--offline"]) == 1
    assert main(base + ["ingest", str(tmp_path / "absent.jsonl"), "--layout", "jsonl", "--out", str(tmp_path / "o.jsonl")]) == 1


def test_parser():
    parser = build_parser()
    args = parser.parse_args(["evaluate", "--perturb"])
    assert args.perturb == "mid" and args.modules == "all"
    args = parser.parse_args(["explain", "--llm", "http://localhost:8000"])
    assert args.llm == "http://localhost:8000" and not args.offline
    with pytest.raises(SystemExit):
        parser.parse_args(["explain", "--offline", "--llm", "http://x"])
    with pytest.raises(SystemExit):
        parser.parse_args(["ingest", "somewhere", "--layout", "csv", "--out", "o"])
