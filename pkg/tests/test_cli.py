from __future__ import annotations

import json
import subprocess
import sys

import pytest
import yaml

from hubbard_trotter.circuit import BASIS_GATES, QuantumCircuit
from hubbard_trotter.exact import KrylovConvergenceError
from hubbard_trotter.harness import cli
from hubbard_trotter.harness.cli import EXIT_CAPABILITY, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from hubbard_trotter.trotter import TrotterPlan, build_circuit
from hubbard_trotter.model import HubbardParams


def _config(tmp_path, **extra):
    doc = {"schema_version": 1, "model": {"L": 3}, "plan": {"r_max": 2, "dt": 0.25}}
    doc.update(extra)
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_build_text_and_json(tmp_path, capsys):
    cfg = _config(tmp_path)
    out = tmp_path / "circ"
    assert main(["build", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["circuit_first_L3_r1.txt", "circuit_first_L3_r2.txt"]
    text = (out / "circuit_first_L3_r2.txt").read_text()
    ref = build_circuit(TrotterPlan("first", 2, 0.25, HubbardParams(3), prepare_neel=True))
    assert QuantumCircuit.from_text(text).gates == ref.gates

    assert main(["build", "--config", cfg, "--out", str(out), "--format", "json", "--basis", "--r-max", "1"]) == 0
    c = QuantumCircuit.from_json((out / "circuit_first_L3_r1.json").read_text())
    assert {g.kind for g in c.gates} <= BASIS_GATES | {"BARRIER"}
    assert str(out / "circuit_first_L3_r1.json") in capsys.readouterr().out


def test_evolve_writes_results(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["evolve", "--preset", "paper-L10", "--r-max", "2", "--backend", "exact", "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "r,tau,value,spread" and len(lines) == 3
    data = json.loads((out / "results.json").read_text())
    assert data["config"]["backend"] == "exact"
    assert data["points"][0]["value"] == pytest.approx(0.15033699897613134, abs=1e-9)


def test_depth_subcommand(tmp_path, capsys):
    out = tmp_path / "d"
    assert main(["depth", "--config", _config(tmp_path, model={"L": 4}), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert printed == (out / "depth.csv").read_text()
    assert printed.splitlines()[0].startswith("order,")


def test_mitigate_subcommand(tmp_path):
    cfg = _config(
        tmp_path,
        model={"L": 2},
        plan={"r_max": 1, "dt": 0.2},
        shots=200,
        noise={"p2": 0.01},
        mitigation={"twirl_instances": 2, "trex_samples": 2},
    )
    out = tmp_path / "m"
    assert main(["mitigate", "--config", cfg, "--out", str(out), "--trajectories", "3"]) == 0
    data = json.loads((out / "results.json").read_text())
    assert data["config"]["backend"] == "noisy"
    assert data["config"]["mitigation"]["trajectories"] == 3


def test_plotdata_all(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["evolve", "--config", _config(tmp_path, backend="mps"), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["plotdata", "--results", str(out)]) == 0
    names = sorted(p.name for p in out.glob("*.csv") if p.name != "truncation_log.csv")
    assert names == [
        "depth-vs-r_first_L3.csv",
        "depth-vs-r_second-optimized_L3.csv",
        "depth-vs-r_second_L3.csv",
        "mps-diagnostics_mps_first_L3_chi1024.csv",
        "neel-vs-time_mps_first_L3_chi1024.csv",
    ]


def test_exit_codes(tmp_path, capsys, monkeypatch):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nmodel: {L: 3}\nbackend: gpu\n")
    assert main(["evolve", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["evolve", "--preset", "nope"]) == EXIT_CONFIG
    assert main(["plotdata", "--results", str(tmp_path / "missing")]) == EXIT_CONFIG
    assert main(["evolve", "--config", _config(tmp_path, model={"L": 20})]) == EXIT_CAPABILITY
    assert "capability error" in capsys.readouterr().err

    def boom(cfg):
        raise KrylovConvergenceError("no convergence")

    monkeypatch.setattr(cli, "run_sweep", boom)
    assert main(["evolve", "--config", _config(tmp_path), "--out", str(tmp_path / "x")]) == EXIT_NUMERICAL


def test_source_is_required():
    with pytest.raises(SystemExit):
        main(["evolve"])
    with pytest.raises(SystemExit):
        main(["evolve", "--config", "a.yaml", "--preset", "paper-L10"])


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "hubbard_trotter.harness.cli", "depth", "--preset", "paper-L10",
         "--r-max", "1", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "depth.csv").exists()
