import json

import numpy as np
import pytest

from ledft.cli import main
from ledft.config import RunConfig, load_config
from ledft.errors import ConfigError

SMALL = {"protocol": {"n_locations": 1}, "train": {"epochs": 2, "batch_size": 500}, "seed": 3}


def write_cfg(path, doc):
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def small_cfg(tmp_path):
    return write_cfg(tmp_path / "cfg.json", SMALL)


@pytest.fixture
def small_data(tmp_path, small_cfg, capsys):
    out = tmp_path / "data"
    assert main(["generate", "--config", str(small_cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    return out


def test_defaults_round_trip():
    cfg = RunConfig()
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()
    assert again.config_hash() == cfg.config_hash()
    assert again.dataset_hash() == cfg.dataset_hash()


def test_seed_changes_hashes():
    cfg = RunConfig()
    assert cfg.with_seed(1).dataset_hash() != cfg.dataset_hash()
    # training settings do not belong to the dataset
    assert RunConfig.from_dict({"train": {"epochs": 3}}).dataset_hash() == cfg.dataset_hash()


@pytest.mark.parametrize(
    "doc",
    [
        {"bogus": 1},
        {"noise": {"base_std": 2, "colour": "pink"}},
        {"medium": {"pdms": {"cone_exponent": 80.0}}},
        {"medium": {"active": "water"}},
        {"compliance": {"shear": -1.0}},
        {"seed": -4},
        {"pipeline": {"window": 0}},
    ],
)
def test_invalid_configs_rejected(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_medium_selection():
    cfg = RunConfig.from_dict({"medium": {"active": "air"}})
    assert cfg.medium.name == "air" and cfg.twin.medium.attenuation == 0


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="nope.json"):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_missing_config_exit_code(tmp_path, capsys):
    missing = tmp_path / "missing.json"
    assert main(["generate", "--config", str(missing), "--out", str(tmp_path / "o")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_generate_without_output_dir(capsys):
    assert main(["generate"]) == 2
    assert "output directory" in capsys.readouterr().err


def test_generate_manifest(small_data):
    manifest = json.loads((small_data / "manifest.json").read_text())
    assert len(manifest["train"]) == 5 and len(manifest["test"]) == 1
    for entry in manifest["train"] + manifest["test"]:
        assert (small_data / entry["path"]).exists()
        assert (small_data / entry["path"]).with_suffix(".json").exists()
        assert len(entry["sha256"]) == 64
    assert manifest["seed"] == 3
    assert manifest["dataset_hash"] == RunConfig.from_dict(SMALL).dataset_hash()


def test_generate_twice_same_hashes(tmp_path, small_cfg, small_data, capsys):
    other = tmp_path / "again"
    assert main(["generate", "--config", str(small_cfg), "--out", str(other)]) == 0
    capsys.readouterr()
    assert (other / "manifest.json").read_bytes() == (small_data / "manifest.json").read_bytes()


def test_seed_override_changes_data(tmp_path, small_cfg, small_data, capsys):
    other = tmp_path / "seeded"
    assert main(["generate", "--config", str(small_cfg), "--out", str(other), "--seed", "4"]) == 0
    capsys.readouterr()
    a = json.loads((small_data / "manifest.json").read_text())
    b = json.loads((other / "manifest.json").read_text())
    assert b["seed"] == 4 and a["train"][0]["sha256"] != b["train"][0]["sha256"]


def test_train_and_eval_small(tmp_path, small_data, capsys):
    model = tmp_path / "m.json"
    assert main(["train", "--data", str(small_data), "--model", str(model)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "epoch,loss"
    assert [l.split(",")[0] for l in out[1:3]] == ["1", "2"]
    report = tmp_path / "report"
    assert main(["eval", "--data", str(small_data), "--model", str(model), "--out", str(report)]) == 0
    names = sorted(p.name for p in report.iterdir())
    assert names == sorted(
        ["report.txt", "report.csv", "curve_force.csv", "curve_torque.csv"] + [f"trace_{a}.csv" for a in ("fx", "fy", "fz", "tx", "ty", "tz")]
    )
    trace = (report / "trace_fx.csv").read_text().splitlines()
    assert trace[0] == "t,truth,prediction"
    assert len(trace) - 1 == 10000 - 3


def test_corrupt_row_reported(small_data, tmp_path, capsys):
    manifest = json.loads((small_data / "manifest.json").read_text())
    path = small_data / manifest["train"][2]["path"]
    lines = path.read_text().splitlines()
    lines[41] = lines[41].replace(",", ";", 3)
    path.write_text("\n".join(lines) + "\n")
    assert main(["train", "--data", str(small_data), "--model", str(tmp_path / "m.json")]) == 1
    err = capsys.readouterr().err
    assert "row 42" in err and path.name in err


def test_train_config_must_match_dataset(small_data, tmp_path, capsys):
    other = write_cfg(tmp_path / "other.json", {**SMALL, "seed": 9})
    assert main(["train", "--data", str(small_data), "--model", str(tmp_path / "m.json"), "--config", str(other)]) == 2
    assert "dataset hash" in capsys.readouterr().err


def test_missing_model_exit_code(small_data, tmp_path, capsys):
    assert main(["eval", "--data", str(small_data), "--model", str(tmp_path / "none.json"), "--out", str(tmp_path / "r")]) == 2
    assert "none.json" in capsys.readouterr().err


def test_missing_manifest(tmp_path, capsys):
    assert main(["train", "--data", str(tmp_path), "--model", str(tmp_path / "m.json")]) == 2
    assert "manifest" in capsys.readouterr().err


def test_eval_shape_mismatch(small_data, tmp_path, capsys):
    """A model built for a different channel set fails with a descriptive message."""
    from ledft.model import TrainedModel, init_params, save_model
    from ledft.pipeline import Normalizer, PipelineConfig

    # keeps all 24 channels, so the data yields 96 features for an 80-wide network
    params = init_params(np.random.default_rng(0), input_dim=80, trunk=(8,), head=(4, 1))
    norm = Normalizer(np.zeros(80), np.ones(80), np.zeros(6), np.ones(6))
    path = save_model(TrainedModel(params, norm, pipeline=PipelineConfig(dropped_channels=frozenset())), tmp_path / "m.json")
    assert main(["eval", "--data", str(small_data), "--model", str(path), "--out", str(tmp_path / "r")]) == 1
    assert "96 features per row but the model expects 80" in capsys.readouterr().err


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--medium", "pdms", "--range", "-2", "2", "--step", "0.1", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[0] == "offset_mm,irradiance" and len(lines) == 42
    air = float(text.split("air ")[1].split(" mm")[0])
    pdms = float(text.split("pdms ")[1].split(" mm")[0])
    assert pdms > air


def test_sweep_empty_range(tmp_path, capsys):
    assert main(["sweep", "--range", "1", "1", "--out", str(tmp_path / "s.csv")]) == 2
    capsys.readouterr()


def test_bench_reports_and_is_deterministic(capsys):
    from ledft.cli import cmd_bench

    a = cmd_bench(RunConfig(), frames=300)
    b = cmd_bench(RunConfig(), frames=300)
    text = capsys.readouterr().out
    assert "frames/s" in text and "us" in text
    assert a["checksum"] == b["checksum"]
    assert a["latency_us"] > 0
