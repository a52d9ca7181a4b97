import json
from pathlib import Path

import pytest

from cli.main import main

SYNTHETIC_CORPUS = str(Path(__file__).resolve().parents[1] / "data" / "synthetic_en_it.tsv")


def run(*argv):
    return main([str(arg) for arg in argv])


def baseline_run(project):
    assert run("--project", project, "init") == 0
    assert run("--project", project, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it") == 0
    assert run("--project", project, "--seed", 7, "split") == 0
    assert run("--project", project, "--backend", "baseline", "predict") == 0
    assert run("--project", project, "eval", "--export-lai") == 0
    assert run("--project", project, "savings", "--sweep") == 0


def test_end_to_end_baseline(tmp_path, capsys):
    project = tmp_path / "run"
    baseline_run(project)
    manifest = json.loads((project / "manifest.json").read_text())
    assert list(manifest["stages"]) == ["init", "ingest", "split", "predict", "eval", "savings"]
    assert manifest["stages"]["ingest"]["report"]["accepted"] == 100
    assert manifest["stages"]["split"]["seed"] == 7
    assert manifest["stages"]["predict"]["backend"]["kind"] == "baseline"
    matrix = manifest["stages"]["eval"]["metrics"]["matrix"]
    assert matrix["tp"] + matrix["fp"] + matrix["tn"] + matrix["fn"] == manifest["stages"]["split"]["test"]
    for ext in ("txt", "json", "csv"):
        assert (project / "reports" / f"run.{ext}").exists()
    assert (project / "predictions" / "lai.csv").read_text().startswith("unit_id,lai\n")
    assert "accuracy: " in capsys.readouterr().out


def test_replay_is_byte_identical(tmp_path):
    first, second = tmp_path / "a" / "run", tmp_path / "b" / "run"
    baseline_run(first)
    baseline_run(second)
    for relative in ("reports/run.txt", "reports/run.json", "reports/run.csv", "splits/split.json", "predictions/predictions.jsonl"):
        assert (first / relative).read_bytes() == (second / relative).read_bytes()


def test_predict_replays_saved_baseline(tmp_path):
    first, second = tmp_path / "a" / "run", tmp_path / "b" / "run"
    baseline_run(first)
    run("--project", second, "init")
    run("--project", second, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it")
    run("--project", second, "--seed", 7, "split")
    saved = first / "jobs" / "baseline.jsonl"
    assert run("--project", second, "--backend", "baseline", "predict", "--baseline-file", saved) == 0
    relative = "predictions/predictions.jsonl"
    assert (first / relative).read_bytes() == (second / relative).read_bytes()


def test_predict_with_missing_baseline_file(tmp_path):
    project = tmp_path / "run"
    run("--project", project, "init")
    run("--project", project, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it")
    run("--project", project, "split")
    missing = tmp_path / "nowhere.jsonl"
    assert run("--project", project, "--backend", "baseline", "predict", "--baseline-file", missing) == 3


def test_eval_before_predict(tmp_path, capsys):
    project = tmp_path / "run"
    run("--project", project, "init")
    capsys.readouterr()
    assert run("--project", project, "eval") == 2
    assert capsys.readouterr().err.strip() == "error: missing_stage: stage 'predict' has not been recorded"


def test_stage_outside_a_project(tmp_path):
    assert run("--project", tmp_path / "nothing", "split") == 2


def test_missing_split_artifact(tmp_path, capsys):
    project = tmp_path / "run"
    run("--project", project, "init")
    run("--project", project, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it")
    run("--project", project, "split")
    (project / "splits" / "split.json").unlink()
    capsys.readouterr()
    assert run("--project", project, "--backend", "baseline", "predict") == 3
    [line] = capsys.readouterr().err.splitlines()
    assert line.startswith("error: validation: cannot read split")


def test_corrupt_predictions_artifact(tmp_path, capsys):
    project = tmp_path / "run"
    run("--project", project, "init")
    run("--project", project, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it")
    run("--project", project, "split")
    run("--project", project, "--backend", "baseline", "predict")
    (project / "predictions" / "predictions.jsonl").write_text("{not json\n")
    capsys.readouterr()
    assert run("--project", project, "eval") == 3
    assert capsys.readouterr().err.startswith("error: validation: cannot read")


def test_stage_cannot_run_twice(tmp_path):
    project = tmp_path / "run"
    run("--project", project, "init")
    run("--project", project, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it")
    assert run("--project", project, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it") == 3


def test_savings_from_literal_matrix(capsys):
    assert run("savings", "--matrix", "256,46,442,90", "--pay-rate", "0.10") == 0
    assert "scenario 2 savings: 57.41%" in capsys.readouterr().out


def test_eval_from_literal_matrix(capsys):
    assert run("eval", "--matrix", "503,81,191,67") == 0
    assert "accuracy: 82.42%" in capsys.readouterr().out
    assert run("eval", "--matrix", "503,81,191") == 3


def test_json_format(capsys):
    assert run("--format", "json", "eval", "--matrix", "256,46,442,90") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["matrix"]["tn"] == 442


def test_compare_and_profile(capsys):
    assert run("compare", "--run", "curie=694,0,0,148", "--run", "gpt-3.5-turbo=706,0,0,136") == 0
    assert "83.85%" in capsys.readouterr().out
    assert run("profile", "--pair", "en-tr=347,60,353,80", "--pair", "en-de=256,46,442,90") == 0
    out = capsys.readouterr().out
    assert "en-tr: TP 347, TN 353 -> balanced" in out
    assert "tn_dominant" in out


def test_curve_from_points(capsys):
    argv = ["curve", "--point", "4000=0,0,84,16", "--point", "2000=0,0,80,20"]
    assert run(*argv) == 0
    assert "trend: improving" in capsys.readouterr().out


def test_curve_computed_with_baseline(tmp_path):
    project = tmp_path / "run"
    run("--project", project, "init")
    run("--project", project, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it")
    run("--project", project, "split")
    assert run("--project", project, "curve", "--sizes", "20,40,80") == 0
    curve = json.loads((project / "manifest.json").read_text())["stages"]["curve"]
    assert [p["train_size"] for p in curve["points"]] == [20, 40, 80]


def test_config_file(tmp_path, capsys):
    config = tmp_path / "config.yaml"
    config.write_text("pay_rate: 0.4\nformat: csv\n")
    assert run("--config", config, "savings", "--matrix", "256,46,442,90") == 0
    assert capsys.readouterr().out.splitlines()[0] == "pay_rate,scenario2_savings"
    assert run("--config", config, "--format", "text", "savings", "--matrix", "256,46,442,90") == 0
    assert "LAI review pay rate 40.00%" in capsys.readouterr().out


def test_config_unknown_key(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text("colour: blue\n")
    assert run("--config", config, "savings", "--matrix", "1,1,1,1") == 3


@pytest.fixture
def remote_project(tmp_path, monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-never-written-anywhere")
    project = tmp_path / "run"
    run("--project", project, "init")
    run("--project", project, "ingest", SYNTHETIC_CORPUS, "--lang-pair", "en-it")
    run("--project", project, "split")
    assert run("--project", project, "prepare") == 0

    def write_scenario(scenario):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario))
        return path

    return project, write_scenario


def test_remote_flow_against_mock(remote_project):
    project, write_scenario = remote_project
    scenario = write_scenario(
        {
            "jobs": {"ftjob-0001": {"statuses": ["succeeded"], "events": [[1, 0.5], [2, 0.04]]}},
            "completions": {"default": " edit"},
        }
    )
    common = ["--project", project, "--mock-scenario", scenario]
    assert run(*common, "finetune", "start") == 0
    assert run(*common, "finetune", "status") == 0
    assert run(*common, "finetune", "events") == 0
    assert run(*common, "predict") == 0
    assert run(*common, "eval") == 0
    stages = json.loads((project / "manifest.json").read_text())["stages"]
    assert stages["finetune_result"]["job"]["fine_tuned_model"] == "ft:curie:mock:ftjob-0001"
    assert stages["finetune_events"]["convergence_step"] == 2
    assert (project / "jobs" / "ftjob-0001_loss.csv").read_text() == "step,loss\n1,0.5\n2,0.04\n"
    assert stages["eval"]["metrics"]["matrix"]["tn"] == 0
    for path in project.rglob("*"):
        if path.is_file():
            assert "sk-never-written-anywhere" not in path.read_text(encoding="utf-8")


def test_predict_needs_a_finished_job(remote_project):
    project, _ = remote_project
    assert run("--project", project, "predict") == 2


def test_transport_failure_exit_code(remote_project, capsys):
    project, write_scenario = remote_project
    scenario = write_scenario({"failures": [{"path": "/v1/files", "status": 401}]})
    capsys.readouterr()
    assert run("--project", project, "--mock-scenario", scenario, "finetune", "start") == 4
    assert capsys.readouterr().err.startswith("error: transport: HTTP 401: invalid credentials")
