from __future__ import annotations

from dataclasses import replace

import pytest
import yaml

from hubbard_trotter.harness import (
    ConfigError,
    ExperimentConfig,
    load_config,
    preset,
    with_env_overrides,
)
from hubbard_trotter.mitigation import MitigationPlan, NoiseModel
from hubbard_trotter.model import HubbardParams

MINIMAL = "schema_version: 1\nmodel: {L: 3}\n"


def test_minimal_document_uses_defaults():
    cfg = ExperimentConfig.from_yaml(MINIMAL)
    assert cfg.params == HubbardParams(3)
    assert cfg.backend == "statevector" and cfg.observables == ("neel",)
    assert cfg.plan.r_values == list(range(1, 11))
    assert cfg.mitigation is None and cfg.workers == 1


def test_yaml_round_trip_preserves_everything():
    cfg = ExperimentConfig(
        HubbardParams(4, t=0.5, U=2.0, mu_up=0.1),
        backend="noisy",
        observables=("neel", "n_total"),
        noise=NoiseModel(p2=0.01, p01=(0.01, 0.02, 0.0, 0.0, 0.0, 0.0, 0.0, 0.03), p10=0.02),
        mitigation=MitigationPlan(zne_factors=(1, 3), trajectories=10),
        name="round",
    )
    back = ExperimentConfig.from_yaml(cfg.to_yaml())
    assert back == cfg
    assert back.to_yaml() == cfg.to_yaml()


def test_record_drops_output_and_workers():
    cfg = replace(preset("paper-L10"), workers=3)
    rec = cfg.record()
    assert "output" not in rec and "workers" not in rec
    assert rec["model"]["L"] == 10


@pytest.mark.parametrize(
    "text",
    [
        "model: {L: 3}\n",
        "schema_version: 2\nmodel: {L: 3}\n",
        "schema_version: 1\n",
        "schema_version: 1\nmodel: {L: 3, K: 1}\n",
        "schema_version: 1\nmodel: {L: 0}\n",
        "schema_version: 1\nmodel: {L: 2.5}\n",
        "schema_version: 1\nmodel: {L: 3}\nbogus: 1\n",
        "schema_version: 1\nmodel: {L: 3}\nbackend: gpu\n",
        "schema_version: 1\nmodel: {L: 3}\nplan: {order: third}\n",
        "schema_version: 1\nmodel: {L: 3}\nplan: {r_min: 4, r_max: 2}\n",
        "schema_version: 1\nmodel: {L: 3}\nplan: {dt: -0.1}\n",
        "schema_version: 1\nmodel: {L: 3}\nplan: {prepare_neel: 1}\n",
        "schema_version: 1\nmodel: {L: 3}\nobservables: [neel, neel]\n",
        "schema_version: 1\nmodel: {L: 3}\nobservables: [magic]\n",
        "schema_version: 1\nmodel: {L: 3}\nobservables: []\n",
        "schema_version: 1\nmodel: {L: 3}\nshots: 0\n",
        "schema_version: 1\nmodel: {L: 3}\nmps: {chi_max: 0}\n",
        "schema_version: 1\nmodel: {L: 3}\nnoise: {p2: 2.0}\n",
        "schema_version: 1\nmodel: {L: 3}\nnoise: {p3: 0.1}\n",
        "schema_version: 1\nmodel: {L: 3}\nmitigation: {zne_factors: [1, 2]}\n",
        "schema_version: 1\nmodel: {L: 3}\nmitigation: 5\n",
        "schema_version: 1\nmodel: {L: 3}\nlimits: {noisy_qubits: 0}\n",
        "schema_version: 1\nmodel: {L: 3}\noutput: {dir: ''}\n",
        "[1, 2]\n",
        "schema_version: 1\nmodel: {L: 3\n",
    ],
)
def test_invalid_documents_are_rejected(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml(text)


def test_preset_and_unknown_preset():
    cfg = preset("paper-L10")
    assert (cfg.params.L, cfg.params.t, cfg.params.U) == (10, 1.0, 1.0)
    assert (cfg.plan.order, cfg.plan.dt, cfg.plan.r_max) == ("first", 0.5, 10)
    with pytest.raises(ConfigError):
        preset("nope")


def test_load_config_from_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"schema_version": 1, "model": {"L": 2}, "backend": "exact"}))
    assert load_config(path).backend == "exact"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_environment_overrides():
    cfg = ExperimentConfig.from_yaml(MINIMAL)
    out = with_env_overrides(cfg, {"HUBBARD_TROTTER_OUTPUT_DIR": "/tmp/x", "HUBBARD_TROTTER_WORKERS": "3"})
    assert out.output.dir == "/tmp/x" and out.workers == 3
    assert with_env_overrides(cfg, {"OTHER": "1"}) == cfg
    with pytest.raises(ConfigError):
        with_env_overrides(cfg, {"HUBBARD_TROTTER_WORKERS": "many"})
    with pytest.raises(ConfigError):
        with_env_overrides(cfg, {"HUBBARD_TROTTER_WORKERS": "0"})
