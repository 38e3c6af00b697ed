"""End-to-end command-line behaviour: files, exit codes, reproducibility."""

import json

import pytest

from atomreadout import cli
from atomreadout.discrimination import threshold_scan
from atomreadout.output import read_histogram_csv

SMALL_RUN = "run.trials = 400\nrun.seed = 7\n"


def write_config(tmp_path, text=SMALL_RUN, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_rows(path):
    """Data rows of a CSV, comment and header lines stripped."""
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest: ")
    return lines[1], lines[2:]


def test_run_writes_histogram_report_and_manifest(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    code = cli.main(["run", "--config", config, "--out", str(out)])
    assert code == 0

    header, rows = read_rows(out / "histogram.csv")
    assert header == "n,count_dark,count_bright"
    assert (out / "histogram.csv").read_text().splitlines()[0] \
        == "# manifest: run_manifest.json"
    total_dark = sum(int(row.split(",")[1]) for row in rows)
    assert 0 < total_dark <= 400

    report = json.loads((out / "report.json").read_text())
    assert 0.0 <= report["fidelity"] <= 1.0
    assert report["threshold"] >= 0
    assert set(report["losses"]) == {"dark", "bright"}
    assert report["manifest"]["config"]["run.trials"] == 400

    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["seed"] == 7
    assert "created_at" in manifest
    assert "created_at" not in report["manifest"]

    stdout = capsys.readouterr().out
    assert "threshold" in stdout
    assert "kept" in stdout


def test_identical_commands_give_identical_bytes(tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    argv = ["run", "--config", config, "--out", str(out)]
    assert cli.main(argv) == 0
    first = {name: (out / name).read_bytes()
             for name in ("histogram.csv", "report.json")}
    assert cli.main(argv) == 0
    for name, payload in first.items():
        assert (out / name).read_bytes() == payload, name


def test_thread_count_changes_no_sample(tmp_path):
    config = write_config(tmp_path)
    out1, out4 = tmp_path / "t1", tmp_path / "t4"
    assert cli.main(["run", "--config", config, "--out", str(out1)]) == 0
    assert cli.main(["run", "--config", config, "--out", str(out4),
                     "--threads", "4"]) == 0
    assert read_rows(out1 / "histogram.csv") == read_rows(out4 / "histogram.csv")
    one = json.loads((out1 / "report.json").read_text())
    four = json.loads((out4 / "report.json").read_text())
    assert one["fidelity"] == four["fidelity"]
    assert one["losses"] == four["losses"]


def test_cli_overrides_land_in_manifest(tmp_path):
    config = write_config(tmp_path, "probe.saturation = 0.05\n")
    out = tmp_path / "out"
    argv = ["run", "--config", config, "--out", str(out),
            "--trials", "123", "--seed", "9"]
    assert cli.main(argv) == 0
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["command"] == argv
    assert manifest["seed"] == 9
    assert manifest["config"]["run.trials"] == 123
    assert manifest["config"]["run.seed"] == 9
    assert manifest["config"]["probe.saturation"] == 0.05


def test_run_single_state_skips_report(tmp_path, capsys):
    config = write_config(tmp_path, SMALL_RUN + "run.prepared_state = dark\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", config, "--out", str(out)]) == 0
    assert not (out / "report.json").exists()
    _, rows = read_rows(out / "histogram.csv")
    assert all(row.endswith(",0") for row in rows)  # bright column empty
    assert "no discrimination report" in capsys.readouterr().out


def test_run_json_format(tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", config, "--out", str(out),
                     "--format", "json"]) == 0
    assert not (out / "histogram.csv").exists()
    doc = json.loads((out / "histogram.json").read_text())
    assert doc["rows"][0].keys() == {"n", "count_dark", "count_bright"}
    assert doc["manifest"]["config"]["run.seed"] == 7


def test_scan_threshold_matches_library(tmp_path):
    config = write_config(tmp_path)
    run_out = tmp_path / "run"
    assert cli.main(["run", "--config", config, "--out", str(run_out)]) == 0
    histogram = run_out / "histogram.csv"

    scan_out = tmp_path / "scan"
    assert cli.main(["scan-threshold", "--histogram", str(histogram),
                     "--out", str(scan_out)]) == 0
    header, rows = read_rows(scan_out / "threshold_scan.csv")
    assert header == "n_c,epsilon_B,epsilon_D,epsilon,is_optimal"

    dark, bright = read_histogram_csv(histogram)
    scan = threshold_scan(dark, bright)
    assert len(rows) == len(scan.points)
    optimal_flags = []
    for row, point in zip(rows, scan.points):
        nc, eps_b, eps_d, err, optimal = row.split(",")
        assert int(nc) == point.threshold
        assert float(eps_b) == point.eps_bright
        assert float(eps_d) == point.eps_dark
        assert float(err) == point.error
        optimal_flags.append(optimal == "1")
    assert sum(optimal_flags) == 1
    assert optimal_flags[scan.best.threshold] \
        == (scan.points[scan.best.threshold].threshold == scan.best.threshold)


def test_scan_threshold_from_config(tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["scan-threshold", "--config", config, "--out", str(out),
                     "--format", "json"]) == 0
    doc = json.loads((out / "threshold_scan.json").read_text())
    assert sum(row["is_optimal"] for row in doc["rows"]) == 1


def test_scan_threshold_needs_exactly_one_source(tmp_path, capsys):
    config = write_config(tmp_path)
    assert cli.main(["scan-threshold", "--out", str(tmp_path)]) == 2
    assert cli.main(["scan-threshold", "--config", config,
                     "--histogram", "h.csv", "--out", str(tmp_path)]) == 2
    assert "exactly one" in capsys.readouterr().err


def test_sweep_writes_table(tmp_path, capsys):
    config = write_config(tmp_path, (
        "sweep.depths_mK = 0.7, 1.4\n"
        "sweep.durations_ms = 1.0, 1.5\n"
        "sweep.saturations = 0.037, 0.061\n"
        "sweep.trials_per_point = 300\n"))
    out = tmp_path / "out"
    assert cli.main(["sweep", "--config", config, "--out", str(out)]) == 0
    header, rows = read_rows(out / "sweep.csv")
    assert header == ("depth_mK,duration_ms,saturation,mean_bright,mean_dark,"
                      "threshold,fidelity,probe_loss")
    assert len(rows) == 2
    assert rows[0].startswith("0.7,")
    assert rows[1].startswith("1.4,")
    assert capsys.readouterr().out.count("depth") == 2


def test_budget_prints_every_row(tmp_path, capsys):
    config = write_config(tmp_path, "")
    out = tmp_path / "out"
    assert cli.main(["budget", "--config", config, "--out", str(out)]) == 0
    doc = json.loads((out / "budget.json").read_text())
    sources = [row["source"] for row in doc["budget"]["rows"]]
    assert sources == ["detector_dark_counts", "detection_inefficiency",
                       "raman_transitions", "imperfect_preparation"]
    assert doc["budget"]["total"] == pytest.approx(
        sum(row["contribution"] for row in doc["budget"]["rows"]), rel=1e-12)
    stdout = capsys.readouterr().out
    for source in sources:
        assert source in stdout
    assert "total" in stdout


@pytest.mark.parametrize("config_text, argv_extra, code, fragment", [
    ("trap.dpeth_mK = 1\n", [], 2, "unknown configuration key"),
    ("run.trials = 0\n", [], 2, "run.trials"),
    (SMALL_RUN, ["--trials", "0"], 2, "run.trials"),
    (SMALL_RUN, ["--threads", "-2"], 2, "--threads"),
])
def test_run_error_exits(tmp_path, capsys, config_text, argv_extra, code,
                         fragment):
    config = write_config(tmp_path, config_text)
    argv = ["run", "--config", config, "--out", str(tmp_path / "out")]
    assert cli.main(argv + argv_extra) == code
    assert fragment in capsys.readouterr().err


def test_empty_bright_histogram_is_a_data_error(tmp_path, capsys):
    histogram = tmp_path / "histogram.csv"
    histogram.write_text("# manifest: run_manifest.json\n"
                         "n,count_dark,count_bright\n0,5,0\n1,3,0\n")
    code = cli.main(["scan-threshold", "--histogram", str(histogram),
                     "--out", str(tmp_path / "out")])
    assert code == 3
    assert "data error" in capsys.readouterr().err


def test_malformed_histogram_is_an_input_error(tmp_path, capsys):
    histogram = tmp_path / "histogram.csv"
    histogram.write_text("n,count_dark\n0,5\n")
    code = cli.main(["scan-threshold", "--histogram", str(histogram),
                     "--out", str(tmp_path / "out")])
    assert code == 2
    assert "expected header" in capsys.readouterr().err


def test_sweep_duplicate_depths_rejected(tmp_path, capsys):
    config = write_config(tmp_path, (
        "sweep.depths_mK = 0.7, 0.7\n"
        "sweep.durations_ms = 1.0, 1.0\n"
        "sweep.saturations = 0.03, 0.03\n"))
    assert cli.main(["sweep", "--config", config,
                     "--out", str(tmp_path / "out")]) == 2
    assert "strictly increasing" in capsys.readouterr().err


def test_fresh_out_dir_leaves_prior_outputs_alone(tmp_path):
    config = write_config(tmp_path)
    first, second = tmp_path / "first", tmp_path / "second"
    assert cli.main(["run", "--config", config, "--out", str(first)]) == 0
    snapshot = {p.name: p.read_bytes() for p in first.iterdir()}
    assert cli.main(["run", "--config", config, "--out", str(second),
                     "--seed", "99"]) == 0
    assert {p.name: p.read_bytes() for p in first.iterdir()} == snapshot
    assert (second / "report.json").exists()


GOLDEN_HISTOGRAM = """\
# manifest: run_manifest.json
n,count_dark,count_bright
0,21,0
1,4,0
2,0,0
3,0,0
4,0,0
5,0,0
6,0,2
7,0,2
8,0,1
9,0,2
10,0,7
11,0,4
12,0,3
13,0,2
14,0,0
15,0,1
16,0,0
17,0,0
18,0,1
"""


def test_golden_histogram_for_pinned_seed(tmp_path):
    config = write_config(tmp_path, "run.trials = 25\nrun.seed = 7\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", config, "--out", str(out)]) == 0
    assert (out / "histogram.csv").read_text() == GOLDEN_HISTOGRAM


def test_missing_config_file(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path)]) == 2
    assert "cannot read" in capsys.readouterr().err
