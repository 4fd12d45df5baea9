import json
from pathlib import Path

import pytest

from spad_sim.core.data_access.run_config import (
    OUTPUT_DIR_ENV,
    RunConfig,
    SweepSettings,
    apply_overrides,
    default_output_dir,
    load_document,
)
from spad_sim.errors import DomainError

DOC = {
    "scene": {"kind": "uniform", "width": 20, "height": 12, "flux": 1000.0},
    "sensor": {"eta": 0.4, "tau_bin": 2e-6},
    "sweep": {"illuminations": [0.1, 1], "exposures": [1e-3, 1e-2]},
    "seed": 3,
    "output_dir": "runs/a",
}


def test_from_dict_fills_defaults():
    cfg = RunConfig.from_dict(DOC)
    assert cfg.sensor.width == 20 and cfg.sensor.height == 12
    assert cfg.sensor.eta == 0.4 and cfg.sensor.dark_rate == 100.0
    assert cfg.conventional.bit_depth == 8
    assert cfg.sweep.cameras == ["spad", "conventional"]
    assert cfg.sweep.illuminations == [0.1, 1.0]
    assert cfg.output_dir == Path("runs/a")
    assert cfg.workers == 1


def test_to_dict_round_trip():
    cfg = RunConfig.from_dict(DOC)
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_missing_sections_are_rejected():
    with pytest.raises(DomainError, match="sweep"):
        RunConfig.from_dict({"scene": DOC["scene"]})
    with pytest.raises(DomainError):
        RunConfig.from_dict({**DOC, "sensor": [1, 2]})


def test_sweep_settings_validation():
    with pytest.raises(DomainError):
        SweepSettings(illuminations=[1.0], exposures=[])
    with pytest.raises(DomainError):
        SweepSettings(illuminations=[-1.0], exposures=[1e-3])
    with pytest.raises(DomainError):
        SweepSettings(illuminations=[1.0], exposures=[0.0])
    with pytest.raises(DomainError):
        SweepSettings(illuminations=[1.0], exposures=[1e-3], cameras=["film"])


def test_overrides_parse_values():
    doc = {"sensor": {"eta": 0.5}}
    apply_overrides(doc, ["sensor.tau_bin=1e-5", "seed=7", "sweep.cameras=[spad]", "scene.kind=disk"])
    assert doc == {
        "sensor": {"eta": 0.5, "tau_bin": 1e-5},
        "seed": 7,
        "sweep": {"cameras": ["spad"]},
        "scene": {"kind": "disk"},
    }


def test_bad_overrides():
    with pytest.raises(DomainError):
        apply_overrides({}, ["seed"])
    with pytest.raises(DomainError):
        apply_overrides({"seed": 1}, ["seed.value=2"])


def test_load_yaml_with_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "scene:\n  kind: uniform\n  width: 8\n  height: 8\n  flux: 10\n"
        "sweep:\n  illuminations: [1]\n  exposures: [1.0e-3]\n",
        encoding="utf-8",
    )
    cfg = RunConfig.load(path, ["sensor.dark_rate=0", "workers=4"])
    assert cfg.sensor.dark_rate == 0
    assert cfg.workers == 4
    assert cfg.sweep.exposures == [1e-3]


def test_load_document_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_document(tmp_path / "absent.yaml")
    (tmp_path / "run.toml").write_text("x = 1", encoding="utf-8")
    with pytest.raises(DomainError):
        load_document(tmp_path / "run.toml")
    (tmp_path / "list.json").write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(DomainError):
        load_document(tmp_path / "list.json")


def test_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env-out"))
    assert default_output_dir() == tmp_path / "env-out"
    doc = {k: v for k, v in DOC.items() if k != "output_dir"}
    assert RunConfig.from_dict(doc).output_dir == tmp_path / "env-out"


@pytest.mark.parametrize("name", ["sweep_low_light.yaml", "sweep_hdr.json"])
def test_sample_configs_load(name):
    cfg = RunConfig.load(Path(__file__).resolve().parents[2] / "sample_data" / "configs" / name)
    assert cfg.sensor.shape == (cfg.scene.height, cfg.scene.width)
    assert all(t > 0 for t in cfg.sweep.exposures)
