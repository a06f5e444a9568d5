import json

import pytest

from humanal import formats
from humanal.cli import main
from humanal.features import SLOTS

CONFIG = """\
runs: 1
classifiers:
  - {kind: gaussian_nb}
  - {kind: decision_tree, max_depth: 3}
simulator:
  domains:
    - {name: SM, n_annotators: 5}
    - {name: EM, n_annotators: 5}
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text(CONFIG)
    return str(p)


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_simulate_then_validate_and_stats(tmp_path, cfg, capsys):
    out = tmp_path / "corpus"
    assert main(["simulate", "--config", cfg, "--seed", "3", "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} >= {"decisions.jsonl", "manifest.json", "sim_truth.json",
                                               "config.json", "targets.json"}
    capsys.readouterr()
    assert main(["validate", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["clean"] is True
    assert main(["stats", str(out), "--out", str(tmp_path / "st")]) == 0
    assert (tmp_path / "st" / "buckets.csv").exists()


def test_validate_reports_violations(tmp_path, capsys):
    rec = {"annotator_id": "a", "domain": "SM", "sample_id": "s", "label": 0, "confidence": 0.9,
           "decision_time_ms": 100, "position": 1}
    (tmp_path / "decisions.jsonl").write_text(json.dumps(rec) + "\n")
    assert main(["validate", str(tmp_path)]) == 1
    kinds = {v["kind"] for v in json.loads(capsys.readouterr().out)["corpora"][0]["violations"]}
    assert {"LabelConfidenceMismatch", "MissingAnnotator"} <= kinds


def test_parse_error_exit_code_and_json(tmp_path, capsys):
    (tmp_path / "decisions.jsonl").write_text("{oops\n")
    assert main(["validate", str(tmp_path)]) == 3
    err = _error(capsys)
    assert err["error"] == "ParseError" and err["details"]["line"] == 1 and err["exit_code"] == 3


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["evaluate", "--seed", "1", "--runs", "0", "--out", str(tmp_path / "o")]) == 2
    assert _error(capsys)["error"] == "ConfigError"
    assert main(["evaluate", "--seed", "1"]) == 2  # no --out


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_calibrate_writes_labels(tmp_path, cfg, capsys):
    corpus = tmp_path / "c"
    main(["simulate", "--config", cfg, "--seed", "1", "--out", str(corpus)])
    c = formats.read_corpus(corpus)
    formats.write_corpus(c.for_domain("SM"), tmp_path / "train")
    formats.write_corpus(c.for_domain("EM"), tmp_path / "test")
    out = tmp_path / "cal"
    assert main(["calibrate", "--config", cfg, "--seed", "2", "--train", str(tmp_path / "train"),
                 "--test", str(tmp_path / "test"), "--out", str(out)]) == 0
    labels = [json.loads(line) for line in (out / "labels.jsonl").read_text().splitlines()]
    assert len(labels) == len(c.for_domain("EM"))
    assert set(labels[0]) == {"annotator_id", "domain", "sample_id", "original_label",
                              "humanal_label", "model_kind"}
    assert formats.read_json(out / "config.json")["seed"] == 2


def test_missing_seed_is_drawn_and_recorded(tmp_path, cfg, caplog):
    out = tmp_path / "e"
    assert main(["evaluate", "--config", cfg, "--setting", "v4", "--out", str(out)]) == 0
    assert isinstance(formats.read_json(out / "config.json")["seed"], int)
    assert "random seed" in caplog.text


def test_featurize_to_stdout(tmp_path, cfg, capsys):
    main(["simulate", "--config", cfg, "--seed", "5", "--out", str(tmp_path / "c")])
    capsys.readouterr()
    assert main(["featurize", str(tmp_path / "c"), "--mask", "time"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",")[3:] == list(SLOTS)
    assert "NA" in lines[1] and len(lines) == len(formats.read_corpus(tmp_path / "c")) + 1


def test_ablate_outputs(tmp_path, cfg, capsys):
    out = tmp_path / "ab"
    assert main(["ablate", "--config", cfg, "--seed", "1", "--mode", "isolate", "--setting", "v4",
                 "--out", str(out)]) == 0
    rows = formats.read_json(out / "ablation.json")["rows"]
    assert [r["feature_set"] for r in rows][:2] == ["all", "UserDecision"]
