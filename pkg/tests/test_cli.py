import json

import pytest
from click.testing import CliRunner

from linematch.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def _write_instance(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


W1 = {"t": "3", "metric": "line", "servers": ["0", "10"],
      "requests": ["1", "2"]}


def test_gen_run_verify_pipeline(runner, tmp_path):
    out = tmp_path / "instance.json"
    result = runner.invoke(main, ["gen", "--kind", "uniform", "--n", "6",
                                  "--seed", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    first = out.read_bytes()
    runner.invoke(main, ["gen", "--kind", "uniform", "--n", "6",
                         "--seed", "3", "--out", str(out)])
    assert out.read_bytes() == first  # generation is reproducible

    result = runner.invoke(main, ["run", "--instance", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert summary["n"] == 6
    assert float(summary["ratio_normalized"]) > 0

    result = runner.invoke(main, ["verify", "--instance", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["passed"] is True
    assert any(c["name"] == "dual-feasibility" for c in report["checks"])


def test_run_worked_instance(runner, tmp_path):
    path = _write_instance(tmp_path / "w1.json", W1)
    result = runner.invoke(main, ["run", "--instance", path])
    summary = json.loads(result.output)
    assert summary["w_online"] == "9"
    assert summary["w_opt"] == "9"
    assert summary["ratio"] == "1"


def test_trace_export(runner, tmp_path):
    path = _write_instance(tmp_path / "w1.json", W1)
    trace_path = tmp_path / "trace.json"
    result = runner.invoke(main, ["run", "--instance", path,
                                  "--emit-trace", str(trace_path)])
    assert result.exit_code == 0
    trace = json.loads(trace_path.read_text())
    assert trace["w_online"] == "9"
    assert [p["phi"] for p in trace["phases"]] == ["3", "24"]
    assert trace["phases"][1]["y_server"] == ["-18", "0"]

    again = tmp_path / "trace2.json"
    runner.invoke(main, ["run", "--instance", path, "--emit-trace",
                         str(again)])
    assert trace_path.read_bytes() == again.read_bytes()


def test_run_with_t_override(runner, tmp_path):
    path = _write_instance(tmp_path / "w1.json", W1)
    result = runner.invoke(main, ["run", "--instance", path, "--t", "2"])
    assert result.exit_code == 0
    assert json.loads(result.output)["t"] == "2"


def test_verify_reports_failure_with_nonzero_exit(runner, tmp_path):
    # abutting search intervals around a free server: the default closed
    # region merging fails the containment check on this input
    payload = {"t": "3", "metric": "line", "servers": ["4", "0", "2"],
               "requests": ["1", "3", "4"]}
    path = _write_instance(tmp_path / "abut.json", payload)
    result = runner.invoke(main, ["verify", "--instance", path])
    assert result.exit_code == 1
    report = json.loads(result.output)
    failing = [c["name"] for c in report["checks"] if c["status"] == "fail"]
    assert failing == ["region-edge-containment"]


def test_verify_determinism(runner, tmp_path):
    instance = tmp_path / "inst.json"
    runner.invoke(main, ["gen", "--kind", "cluster-gap", "--n", "8",
                         "--seed", "1", "--out", str(instance)])
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert runner.invoke(main, ["verify", "--instance", str(instance),
                                "--out", str(a)]).exit_code == 0
    assert runner.invoke(main, ["verify", "--instance", str(instance),
                                "--out", str(b)]).exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_experiment_command(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "kinds": ["uniform", "cluster-gap"],
        "n_values": [4, 8],
        "seeds": 2,
        "verify_every_run": True,
    }))
    out = tmp_path / "results.csv"
    result = runner.invoke(main, ["experiment", "--config", str(config),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 9  # header + 2 kinds * 2 sizes * 2 seeds
    assert lines[0].startswith("id,kind,n,seed,")
    assert all(line.endswith(",true") for line in lines[1:])

    again = tmp_path / "results2.csv"
    runner.invoke(main, ["experiment", "--config", str(config),
                         "--out", str(again)])
    assert out.read_bytes() == again.read_bytes()


def test_invalid_instance_file(runner, tmp_path):
    path = _write_instance(tmp_path / "bad.json",
                           {"t": "1", "servers": ["0"], "requests": ["1"]})
    result = runner.invoke(main, ["run", "--instance", path])
    assert result.exit_code != 0
