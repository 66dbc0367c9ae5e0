import json
import shutil
import subprocess

import pytest

from trialbench.cli import main
from trialbench.report import load_report_schema, validate_report

from conftest import FIXTURE_CSV

SCHEMA = {"s": "S", "a": "A", "y": "Y", "x": ["X1"]}


def analysis_payload(tmp_path, **overrides) -> dict:
    payload = {
        "input": str(FIXTURE_CSV),
        "schema": SCHEMA,
        "output": str(tmp_path / "report.json"),
    }
    payload.update(overrides)
    return payload


def written_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_analyze_end_to_end(tmp_path, write_config, capsys):
    out = tmp_path / "report.json"
    code = main(["analyze", write_config(analysis_payload(tmp_path))])
    assert code == 0
    report = written_report(out)
    validate_report(report)
    assert report["kind"] == "analysis"
    for name in ("phi", "chi", "psi"):
        value = report["estimates"][name]["1"]["value"]
        assert abs(value - 3.8026246797750964) < 0.1
        interval = report["estimates"][name]["1"]["sandwich"]
        assert interval["lower"] < value < interval["upper"]
    assert report["interpretation"]["benchmarking_verdict"] == "compatible"
    assert report["contrasts"]["ate"]["phi"]["value"] == pytest.approx(
        report["estimates"]["phi"]["1"]["value"] - report["estimates"]["phi"]["0"]["value"],
        abs=1e-10,
    )
    assert (tmp_path / "report.txt").exists()
    stdout = capsys.readouterr().out
    assert "report written to" in stdout
    assert "treatment effects" in stdout


def test_analyze_quiet_suppresses_summary(tmp_path, write_config, capsys):
    code = main(["analyze", write_config(analysis_payload(tmp_path)), "--quiet"])
    assert code == 0
    assert capsys.readouterr().out == ""


def test_analyze_output_flag_overrides_and_is_echoed(tmp_path, write_config):
    override = tmp_path / "moved.json"
    code = main(
        ["analyze", write_config(analysis_payload(tmp_path)), "--quiet", "--output", str(override)]
    )
    assert code == 0
    report = written_report(override)
    assert report["metadata"]["config"]["output"] == str(override)
    assert not (tmp_path / "report.json").exists()


def test_analyze_config_echo_reproduces_report(tmp_path, write_config):
    out = tmp_path / "report.json"
    payload = analysis_payload(tmp_path, bootstrap=25, seed=14)
    assert main(["analyze", write_config(payload), "--quiet"]) == 0
    first = written_report(out)

    echo = first["metadata"]["config"]
    assert main(["analyze", write_config(echo, "echo.json"), "--quiet"]) == 0
    second = written_report(out)

    first["metadata"].pop("created_utc")
    second["metadata"].pop("created_utc")
    assert first == second


def test_simulate_end_to_end(tmp_path, write_config, capsys):
    out = tmp_path / "sim.json"
    payload = {
        "scenario": "D1",
        "reps": 10,
        "n": [300, 300],
        "seed": 6,
        "estimators": ["phi"],
        "arms": [1],
        "restriction": False,
        "output": str(out),
    }
    code = main(["simulate", write_config(payload)])
    assert code == 0
    report = written_report(out)
    validate_report(report)
    assert report["kind"] == "simulation"
    assert report["result"]["truths"]["mean1"] == pytest.approx(3.8026246797750964, abs=1e-12)
    series = report["result"]["series"]
    assert len(series) == 1 and series[0]["reps_used"] == 10
    stdout = capsys.readouterr().out
    assert "bias" in stdout


def test_validate_good_dataset(tmp_path, write_config, capsys):
    out = tmp_path / "validation.json"
    payload = {"input": str(FIXTURE_CSV), "schema": SCHEMA, "output": str(out)}
    code = main(["validate", write_config(payload)])
    assert code == 0
    report = written_report(out)
    validate_report(report)
    assert report["kind"] == "validation"
    assert report["validation"]["ok"] is True
    assert "dataset is usable" in capsys.readouterr().out


def test_validate_failing_dataset_exits_3_and_reports(tmp_path, write_config):
    csv = tmp_path / "bad.csv"
    lines = ["S,A,Y,X1"]
    lines += [f"1,{i % 2},1.5,{i % 2}" for i in range(8)]
    lines += ["0,0,1.0,0", "0,0,2.0,1", "0,0,1.3,0", "0,0,0.7,1"]
    csv.write_text("\n".join(lines) + "\n")
    out = tmp_path / "validation.json"
    payload = {"input": str(csv), "schema": SCHEMA, "output": str(out)}
    code = main(["validate", write_config(payload), "--quiet"])
    assert code == 3
    report = written_report(out)
    assert report["validation"]["ok"] is False
    failed = [c for c in report["validation"]["checks"] if c["status"] == "fail"]
    assert any("(s=0, a=1)" in c["message"] for c in failed)


def test_unknown_config_key_exits_2(tmp_path, write_config, capsys):
    payload = analysis_payload(tmp_path, estimator="phi")
    code = main(["analyze", write_config(payload), "--quiet"])
    assert code == 2
    error = json.loads(capsys.readouterr().out)["error"]
    assert error["type"] == "ConfigError"
    assert "estimator" in error["message"]
    assert error["exit_code"] == 2


def test_missing_config_file_exits_2(tmp_path, capsys):
    code = main(["analyze", str(tmp_path / "absent.json")])
    assert code == 2
    assert "not found" in json.loads(capsys.readouterr().out)["error"]["message"]


def test_invalid_json_config_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["analyze", str(path)]) == 2
    assert "not valid JSON" in json.loads(capsys.readouterr().out)["error"]["message"]


def test_single_bootstrap_replicate_rejected(tmp_path, write_config, capsys):
    payload = analysis_payload(tmp_path, bootstrap=1)
    assert main(["analyze", write_config(payload), "--quiet"]) == 2
    assert "bootstrap" in json.loads(capsys.readouterr().out)["error"]["message"]


def test_missing_input_csv_exits_3(tmp_path, write_config, capsys):
    payload = analysis_payload(tmp_path, input=str(tmp_path / "absent.csv"))
    assert main(["analyze", write_config(payload), "--quiet"]) == 3
    error = json.loads(capsys.readouterr().out)["error"]
    assert error["exit_code"] == 3


def test_unparseable_cell_exits_3(tmp_path, write_config, capsys):
    csv = tmp_path / "bad_cell.csv"
    csv.write_text("S,A,Y,X1\n1,0,oops,0\n1,1,1.0,1\n0,0,1.0,0\n0,1,2.0,1\n")
    payload = analysis_payload(tmp_path, input=str(csv))
    assert main(["analyze", write_config(payload), "--quiet"]) == 3
    assert json.loads(capsys.readouterr().out)["error"]["type"] == "ParseError"


def test_separated_propensity_exits_4(tmp_path, write_config, capsys):
    csv = tmp_path / "separated.csv"
    lines = ["S,A,Y,X1"]
    for i in range(40):
        x = i % 2
        lines.append(f"1,{x},{1.0 + 0.1 * (i % 7):.2f},{x}")
    for i in range(40):
        lines.append(f"0,{(i // 2) % 2},{1.5 + 0.1 * (i % 5):.2f},{i % 2}")
    csv.write_text("\n".join(lines) + "\n")
    payload = analysis_payload(tmp_path, input=str(csv))
    assert main(["analyze", write_config(payload), "--quiet"]) == 4
    error = json.loads(capsys.readouterr().out)["error"]
    assert error["type"] == "SeparationError"
    assert "propensity_s1" in error["message"]


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    capsys.readouterr()


def test_report_schema_ships_with_package():
    schema = load_report_schema()
    assert schema["$schema"].startswith("http://json-schema.org/")


def test_console_script_is_installed(tmp_path, write_config):
    exe = shutil.which("trialbench")
    if exe is None:
        pytest.skip("console script not on PATH in this environment")
    payload = {"input": str(FIXTURE_CSV), "schema": SCHEMA}
    proc = subprocess.run(
        [exe, "validate", write_config(payload)],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert "dataset is usable" in proc.stdout
