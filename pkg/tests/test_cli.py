"""Command-line interface: exit codes, output documents, determinism."""

import json
import math
import subprocess
import sys

import pytest

from spatscert.cli import main
from spatscert.homodyne import read_dataset

DOC_KEYS = ["command", "config", "outputs", "schema_version", "warnings"]


def _simulate(tmp_path, name="data.txt", nbar=0.98, eta=0.3, count=20_000, seed=3):
    path = tmp_path / name
    rc = main(
        [
            "simulate",
            "--nbar", str(nbar),
            "--eta", str(eta),
            "--count", str(count),
            "--seed", str(seed),
            "--out", str(path),
        ]
    )
    assert rc == 0
    return path


def _load(path):
    text = path.read_text()
    assert text.endswith("}\n")
    doc = json.loads(text)
    assert list(doc.keys()) == DOC_KEYS
    assert doc["schema_version"] == 1
    return doc


def test_simulate_writes_dataset(tmp_path, capsys):
    path = _simulate(tmp_path, count=5000)
    out = capsys.readouterr().out
    assert "wrote 5000 quadrature records to" in out
    ds = read_dataset(path)
    assert ds.count == 5000
    assert ds.params.nbar == 0.98 and ds.params.eta == 0.3
    # phase-randomized: Var(x) = <n> + 1/2
    var = float([l for l in out.splitlines() if "sample variance" in l][0].split(":")[1])
    assert var == pytest.approx(0.3 * (2 * 0.98 + 1) + 0.5, abs=0.05)


def test_simulate_deterministic_bytes(tmp_path):
    a = _simulate(tmp_path, "a.txt", count=500)
    b = _simulate(tmp_path, "b.txt", count=500)
    c = _simulate(tmp_path, "c.txt", count=500, seed=4)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--nbar", "-1", "--eta", "0.5", "--count", "10", "--seed", "1"],
        ["simulate", "--nbar", "1", "--eta", "1.5", "--count", "10", "--seed", "1"],
        ["simulate", "--nbar", "1", "--eta", "0.5", "--count", "0", "--seed", "1"],
    ],
)
def test_simulate_usage_errors(tmp_path, capsys, argv):
    rc = main(argv + ["--out", str(tmp_path / "x.txt")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_unwritable_out(tmp_path, capsys):
    rc = main(
        ["simulate", "--nbar", "0", "--eta", "1", "--count", "10", "--seed", "1",
         "--out", str(tmp_path / "missing" / "x.txt")]
    )
    assert rc == 1


def test_missing_required_argument_exits_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--nbar", "0", "--eta", "1", "--count", "10", "--seed", "1"])
    assert exc.value.code == 2


def test_reconstruct_document(tmp_path, capsys):
    data = _simulate(tmp_path)
    out = tmp_path / "rec.json"
    rc = main(["reconstruct", "--data", str(data), "--out", str(out)])
    assert rc == 0
    assert "wrote reconstruction results to" in capsys.readouterr().out
    doc = _load(out)
    assert doc["command"] == "reconstruct"
    assert doc["config"]["cutoff"] == 30 and doc["config"]["bins"] == 256
    o = doc["outputs"]
    assert len(o["probs"]) == 31
    assert sum(o["probs"]) == pytest.approx(1.0, abs=1e-9)
    assert o["converged"] is True
    assert o["iterations"] >= 1
    assert o["fit"]["model_mismatch"] is False
    assert o["fit"]["eta"] == pytest.approx(0.3, abs=0.1)
    assert o["x_max"] >= math.sqrt(61.0) + 4.0
    assert doc["warnings"] == []


def test_reconstruct_usage_and_data_errors(tmp_path, capsys):
    data = _simulate(tmp_path)
    out = tmp_path / "rec.json"
    assert main(["reconstruct", "--data", str(data), "--cutoff", "3", "--out", str(out)]) == 2
    assert main(["reconstruct", "--data", str(data), "--bins", "8", "--out", str(out)]) == 2
    capsys.readouterr()

    missing = tmp_path / "nope.txt"
    assert main(["reconstruct", "--data", str(missing), "--out", str(out)]) == 1

    bad = tmp_path / "bad.txt"
    bad.write_text("not a dataset\n")
    assert main(["reconstruct", "--data", str(bad), "--out", str(out)]) == 1
    assert "line 1: missing header" in capsys.readouterr().err

    nan = tmp_path / "nan.txt"
    nan.write_text("# quadrature-v1 count=2 seed=1 nbar=0.5 eta=0.5\n0.1,0.2\n0.3,nan\n")
    assert main(["reconstruct", "--data", str(nan), "--out", str(out)]) == 1
    assert "line 3: non-finite record" in capsys.readouterr().err


def test_reconstruct_surfaces_completeness_error(tmp_path, capsys):
    data = _simulate(tmp_path, nbar=2.0, eta=0.8, count=50_000, seed=1)
    out = tmp_path / "rec.json"
    rc = main(["reconstruct", "--data", str(data), "--cutoff", "4", "--out", str(out)])
    assert rc == 1
    assert "beyond the reach" in capsys.readouterr().err


def test_certify_analytic_document(tmp_path, capsys):
    out = tmp_path / "cert.json"
    rc = main(["certify", "--nbar", "1.2", "--eta", "0.45", "--out", str(out)])
    assert rc == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if "value=" in l]
    assert len(lines) == 4
    doc = _load(out)
    assert doc["config"]["mode"] == "analytic"
    reports = {r["kind"]: r for r in doc["outputs"]["reports"]}
    assert set(reports) == {
        "multi-point-wigner", "wigner-vs-q", "wigner-negativity", "mandel-q"
    }
    # only the phase-space inequalities reach below half transmission
    assert reports["multi-point-wigner"]["detected"] is True
    assert reports["wigner-vs-q"]["detected"] is True
    assert reports["wigner-negativity"]["detected"] is False
    assert reports["mandel-q"]["detected"] is False
    assert all(r["sigma"] == 0.0 for r in reports.values())
    assert len(reports["multi-point-wigner"]["points"]) == 2
    assert len(reports["wigner-vs-q"]["points"]) == 1
    assert reports["mandel-q"]["points"] == []

    again = tmp_path / "cert2.json"
    assert main(["certify", "--nbar", "1.2", "--eta", "0.45", "--out", str(again)]) == 0
    assert out.read_bytes() == again.read_bytes()


def test_certify_thermal_mode_detects_nothing(tmp_path):
    out = tmp_path / "thermal.json"
    rc = main(
        ["certify", "--nbar", "1.2", "--eta", "0.45", "--no-add-photon", "--out", str(out)]
    )
    assert rc == 0
    doc = _load(out)
    assert doc["config"]["add_photon"] is False
    assert all(not r["detected"] for r in doc["outputs"]["reports"])


def test_certify_vacuum_skips_undefined_mandel(tmp_path):
    out = tmp_path / "vac.json"
    rc = main(
        ["certify", "--nbar", "0", "--eta", "0.5", "--no-add-photon", "--out", str(out)]
    )
    assert rc == 0
    doc = _load(out)
    kinds = [r["kind"] for r in doc["outputs"]["reports"]]
    assert "mandel-q" not in kinds and len(kinds) == 3
    assert any("mandel-q" in w for w in doc["warnings"])


def test_certify_certifier_selection(tmp_path, capsys):
    out = tmp_path / "one.json"
    rc = main(
        ["certify", "--nbar", "0.98", "--eta", "0.3", "--certifier", "eq2",
         "--out", str(out)]
    )
    assert rc == 0
    doc = _load(out)
    assert [r["kind"] for r in doc["outputs"]["reports"]] == ["wigner-vs-q"]
    assert doc["outputs"]["reports"][0]["value"] == pytest.approx(
        -0.010279138432373422, abs=1e-6
    )
    capsys.readouterr()
    rc = main(
        ["certify", "--nbar", "0.98", "--eta", "0.3", "--certifier", "bogus",
         "--out", str(out)]
    )
    assert rc == 2
    assert "multi-point-wigner" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["certify"],
        ["certify", "--nbar", "0.5"],
        ["certify", "--data", "x.txt", "--nbar", "0.5", "--eta", "0.5"],
        ["certify", "--nbar", "0.5", "--eta", "0.5", "--confidence-k", "-1"],
    ],
)
def test_certify_usage_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "c.json")]) == 2


def test_certify_dataset_mode(tmp_path, capsys):
    data = _simulate(tmp_path, count=25_000)
    out = tmp_path / "cert.json"
    argv = [
        "certify", "--data", str(data), "--seed", "7", "--resamples", "6",
        "--out", str(out),
    ]
    rc = main(argv)
    assert rc == 0
    doc = _load(out)
    assert doc["config"]["mode"] == "dataset"
    assert doc["config"]["resamples"] == 6
    fit = doc["outputs"]["fit"]
    assert fit["nbar"] == 0.98  # pinned to the dataset's nominal value
    assert fit["eta"] == pytest.approx(0.3, abs=0.04)
    assert fit["model_mismatch"] is False
    reports = {r["kind"]: r for r in doc["outputs"]["reports"]}
    assert reports["wigner-vs-q"]["detected"] is True
    assert reports["wigner-vs-q"]["sigma"] > 0
    assert reports["wigner-negativity"]["detected"] is False
    samples = doc["outputs"]["bootstrap_samples"]
    assert len(samples) == len(reports) and all(len(s) == 6 for s in samples)
    for r in reports.values():
        assert r["detected"] == (r["value"] + 2.0 * r["sigma"] < 0)

    again = tmp_path / "cert2.json"
    assert main(argv[:-1] + [str(again)]) == 0
    a = json.loads(out.read_text())
    b = json.loads(again.read_text())
    assert a["outputs"] == b["outputs"]


def test_certify_dataset_usage_errors(tmp_path):
    data = _simulate(tmp_path, count=300)
    out = str(tmp_path / "c.json")
    assert main(["certify", "--data", str(data), "--out", out]) == 2  # no seed
    assert main(["certify", "--data", str(data), "--seed", "1", "--resamples", "1",
                 "--out", out]) == 2
    assert main(["certify", "--data", str(data), "--seed", "1", "--cutoff", "3",
                 "--out", out]) == 2
    assert main(["certify", "--data", str(data), "--seed", "1", "--bins", "8",
                 "--out", out]) == 2


def test_scan_csv_output(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    argv = [
        "scan", "--nbar-min", "0", "--nbar-max", "1.2", "--eta-min", "0.4",
        "--eta-max", "0.45", "--steps", "2", "--out", str(out),
    ]
    assert main(argv) == 0
    assert "wrote 4 scan rows to" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[0] == "nbar,eta,eq1,eq2,wmin,mandel,label"
    assert len(lines) == 5
    last = lines[4].split(",")
    assert float(last[0]) == 1.2 and float(last[1]) == 0.45
    assert last[6] == "detected-only-by-phase-space-inequality"

    again = tmp_path / "scan2.csv"
    assert main(argv[:-1] + [str(again)]) == 0
    assert out.read_bytes() == again.read_bytes()


def test_scan_axis_overrides_and_errors(tmp_path):
    out = tmp_path / "scan.csv"
    rc = main(
        ["scan", "--nbar-min", "0.5", "--nbar-max", "0.5", "--nbar-steps", "1",
         "--eta-min", "0.2", "--eta-max", "0.4", "--eta-steps", "3",
         "--steps", "2", "--out", str(out)]
    )
    assert rc == 0
    assert len(out.read_text().splitlines()) == 4
    assert main(["scan", "--steps", "1", "--out", str(out)]) == 2
    assert main(["scan", "--nbar-steps", "0", "--out", str(out)]) == 2
    assert main(["scan", "--nbar-max", "5", "--out", str(out)]) == 2
    assert main(["scan", "--eta-max", "1.2", "--out", str(out)]) == 2
    assert main(["scan", "--nbar-min", "2", "--nbar-max", "1", "--out", str(out)]) == 2


def test_threshold_stdout_and_document(tmp_path, capsys):
    out = tmp_path / "thr.json"
    rc = main(["threshold", "--certifier", "negativity", "--nbar", "0.98",
               "--out", str(out)])
    assert rc == 0
    line = [l for l in capsys.readouterr().out.splitlines() if l][0]
    assert line.startswith("critical eta: ")
    assert float(line.split(":")[1]) == pytest.approx(0.5, abs=1e-3)
    doc = _load(out)
    assert doc["outputs"]["status"] == "threshold"
    assert doc["outputs"]["monotone"] is True
    assert len(doc["outputs"]["scan"]) == 20

    rc = main(["threshold", "--certifier", "mandel", "--nbar", "2.0"])
    assert rc == 0
    assert "no-threshold: certifier detects-nowhere" in capsys.readouterr().out


def test_threshold_usage_errors(tmp_path):
    assert main(["threshold", "--certifier", "bogus", "--nbar", "1"]) == 2
    assert main(["threshold", "--certifier", "eq2", "--nbar", "-1"]) == 2
    assert main(["threshold", "--certifier", "eq2", "--nbar", "1", "--tol", "0"]) == 2


def test_figures_are_rendered(tmp_path):
    data = _simulate(tmp_path, count=2000)
    figs = {name: tmp_path / f"{name}.png" for name in ("sim", "cert", "scan", "thr")}
    assert main(["simulate", "--nbar", "0.5", "--eta", "0.5", "--count", "2000",
                 "--seed", "1", "--out", str(tmp_path / "d2.txt"),
                 "--figure", str(figs["sim"])]) == 0
    assert main(["certify", "--nbar", "1.2", "--eta", "0.45",
                 "--out", str(tmp_path / "c.json"), "--figure", str(figs["cert"])]) == 0
    assert main(["scan", "--nbar-min", "0", "--nbar-max", "0.5", "--eta-min", "0.4",
                 "--eta-max", "0.5", "--steps", "2", "--out", str(tmp_path / "s.csv"),
                 "--figure", str(figs["scan"])]) == 0
    assert main(["threshold", "--certifier", "negativity", "--nbar", "0.5",
                 "--figure", str(figs["thr"])]) == 0
    for name, fig in figs.items():
        assert fig.exists() and fig.stat().st_size > 1000, name


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "cli.txt"
    proc = subprocess.run(
        [sys.executable, "-m", "spatscert.cli", "simulate", "--nbar", "0", "--eta", "1",
         "--count", "50", "--seed", "1", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "wrote 50 quadrature records" in proc.stdout
    assert read_dataset(out).count == 50
