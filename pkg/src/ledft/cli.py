"""Command-line entry point: generate, train, eval, sweep, bench, pipeline.

Exit codes: 0 success, 1 runtime failure, 2 usage, range or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import RunConfig, load_config
from .datagen import generate_dataset, read_datafile, write_datafile
from .errors import ConfigError, InvalidRangeError, LedFtError, ShapeMismatchError
from .evaluation import compute_metrics, render_report, trace_csv
from .geometry import Displacement6, build_layout
from .model import TrainedModel, forward, init_params, load_model, predict, save_model, train
from .optics import frame_signals, fwhm, profile_to_csv, sweep_pair, synthesize_signals
from .pipeline import Normalizer, preprocess

AXES = ("fx", "fy", "fz", "tx", "ty", "tz")


class UsageError(LedFtError):
    """Maps to exit code 2."""


def _file_sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve_config(path: Optional[str]) -> RunConfig:
    return load_config(path) if path else RunConfig()


def cmd_generate(cfg: RunConfig, out: Path) -> dict:
    """Write train/test recordings, sidecars, the resolved config and a manifest."""
    train_files, test_files = generate_dataset(cfg.protocol, cfg.twin, cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "dataset_hash": cfg.dataset_hash(),
        "config": cfg.to_dict(),
    }
    for split, files in (("train", train_files), ("test", test_files)):
        entries = []
        for df in files:
            rel = Path(split) / f"{df.file_id}.csv"
            path = write_datafile(out / rel, df)
            entries.append({"path": rel.as_posix(), "seed": df.metadata["seed"], "sha256": _file_sha(path)})
        manifest[split] = entries
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(train_files)} train and {len(test_files)} test files to {out}")
    return manifest


def _load_manifest(data: Path) -> dict:
    path = data / "manifest.json"
    if not path.exists():
        raise UsageError(f"no manifest at {path}")
    return json.loads(path.read_text())


def _load_split(data: Path, manifest: dict, split: str):
    files = []
    for entry in manifest[split]:
        path = data / entry["path"]
        if not path.exists():
            raise UsageError(f"missing data file {path}")
        files.append(read_datafile(path))
    return files


def _config_for_data(manifest: dict, config_path: Optional[str]) -> RunConfig:
    if config_path is None:
        return RunConfig.from_dict(manifest["config"])
    cfg = load_config(config_path)
    if cfg.dataset_hash() != manifest["dataset_hash"]:
        raise UsageError(f"{config_path} does not describe the dataset in the manifest (dataset hash mismatch)")
    return cfg


def cmd_train(data: Path, model_path: Path, config_path: Optional[str] = None, seed: Optional[int] = None) -> TrainedModel:
    manifest = _load_manifest(data)
    cfg = _config_for_data(manifest, config_path)
    tcfg = cfg.train if seed is None else type(cfg.train)(**{**cfg.train.__dict__, "seed": seed})
    files = _load_split(data, manifest, "train")
    ds, normalizer = preprocess(files, cfg.pipeline)
    print("epoch,loss", flush=True)
    model = train(ds, tcfg, normalizer, pipeline=cfg.pipeline, log=lambda e, l: print(f"{e},{l!r}", flush=True))
    model.extra = {"dataset_hash": manifest["dataset_hash"], "config_hash": manifest["config_hash"]}
    save_model(model, model_path)
    print(f"wrote {model_path}")
    return model


def evaluate_files(model: TrainedModel, files, cfg: RunConfig):
    """Predictions and truths (physical units) for every processed row, plus row times."""
    if len(model.normalizer.feature_mean) != model.params.input_dim:
        raise ShapeMismatchError("model normalizer does not match its input width")
    ds, _ = preprocess(files, model.pipeline, model.normalizer)
    if ds.features.shape[1] != model.params.input_dim:
        raise ShapeMismatchError(
            f"data yields {ds.features.shape[1]} features per row but the model expects {model.params.input_dim}"
        )
    pred = model.normalizer.denormalize_labels(forward(model.params, ds.features))
    truth = model.normalizer.denormalize_labels(ds.labels)
    duration = cfg.protocol.file_duration
    rate = cfg.protocol.sample_rate
    t = ds.provenance[:, 0] * duration + ds.provenance[:, 1] / rate
    return pred, truth, t


def cmd_eval(data: Path, model_path: Path, report_dir: Path, split: str = "test", config_path: Optional[str] = None):
    if not model_path.exists():
        raise UsageError(f"model file {model_path} not found")
    model = load_model(model_path)
    manifest = _load_manifest(data)
    if model.extra.get("dataset_hash") not in (None, manifest["dataset_hash"]):
        raise UsageError("model was trained on a different dataset (dataset hash mismatch)")
    cfg = _config_for_data(manifest, config_path)
    files = _load_split(data, manifest, split)
    pred, truth, t = evaluate_files(model, files, cfg)
    report = compute_metrics(pred, truth, cfg.eval.force_bins, cfg.eval.torque_bins)
    report_dir.mkdir(parents=True, exist_ok=True)
    for name, text in render_report(report).items():
        (report_dir / name).write_text(text)
    for i, axis in enumerate(AXES):
        (report_dir / f"trace_{axis}.csv").write_text(trace_csv(t, truth[:, i], pred[:, i]))
    print(render_report(report)["report.txt"], end="")
    return report


def cmd_sweep(cfg: RunConfig, medium: str, axis: str, start: float, stop: float, step: float, out: Path):
    profile = sweep_pair(cfg.media[medium], axis, (start, stop), step, cfg.geometry.plate_gap)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(profile_to_csv(profile))
    widths = {m: fwhm(sweep_pair(cfg.media[m], axis, (start, stop), step, cfg.geometry.plate_gap)) for m in ("air", "pdms")}
    print(f"wrote {len(profile)} points to {out}")
    print(f"FWHM ({axis}): air {widths['air']:.3f} mm, pdms {widths['pdms']:.3f} mm")
    return profile, widths


def cmd_bench(cfg: RunConfig, model_path: Optional[Path] = None, frames: int = 5000) -> dict:
    """Frame-synthesis throughput (per-frame and batched) and single-window latency."""
    layout = build_layout(cfg.geometry)
    rng = np.random.default_rng(cfg.seed)
    disps = np.zeros((frames, 6))
    disps[:, 0] = 0.3 * np.sin(np.linspace(0, 6 * np.pi, frames))
    disps[:, 4] = 0.02 * np.cos(np.linspace(0, 4 * np.pi, frames))

    start = time.perf_counter()
    for i in range(frames):
        frame_signals(layout, Displacement6.from_vector(disps[i]), cfg.medium, cfg.noise, rng, i / cfg.protocol.sample_rate)
    per_frame = frames / (time.perf_counter() - start)

    start = time.perf_counter()
    batch = synthesize_signals(layout, disps, cfg.medium, cfg.noise, np.random.default_rng(cfg.seed))
    batched = frames / (time.perf_counter() - start)
    checksum = hashlib.sha256(batch.tobytes()).hexdigest()[:16]

    if model_path is not None:
        model = load_model(model_path)
    else:
        params = init_params(np.random.default_rng(cfg.seed), cfg.pipeline.n_features, cfg.train.trunk, cfg.train.head)
        n = cfg.pipeline.n_features
        model = TrainedModel(params, Normalizer(np.zeros(n), np.ones(n), np.zeros(6), np.ones(6)))
    window = np.zeros((model.pipeline.window, len(model.pipeline.kept_channels)))
    for _ in range(50):
        predict(model, window)
    times = []
    for _ in range(500):
        t0 = time.perf_counter()
        predict(model, window)
        times.append(time.perf_counter() - t0)
    latency_us = float(np.median(times) * 1e6)
    print(f"frames/s (per-frame calls): {per_frame:.0f}")
    print(f"frames/s (batched): {batched:.0f}")
    print(f"frame checksum: {checksum}")
    print(f"prediction latency (batch 1): {latency_us:.1f} us")
    return {"per_frame_fps": per_frame, "batched_fps": batched, "checksum": checksum, "latency_us": latency_us}


def cmd_pipeline(cfg: RunConfig, out: Path):
    data = out / "data"
    cmd_generate(cfg, data)
    model_path = out / "model.json"
    cmd_train(data, model_path)
    return cmd_eval(data, model_path, out / "report")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ledft", description="LED force/torque sensor digital twin and calibration")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize train/test recordings")
    g.add_argument("--config")
    g.add_argument("--out")
    g.add_argument("--seed", type=int)

    t = sub.add_parser("train", help="preprocess training files and fit the network")
    t.add_argument("--data", required=True)
    t.add_argument("--model", required=True)
    t.add_argument("--config")
    t.add_argument("--seed", type=int)

    e = sub.add_parser("eval", help="evaluate a model on held-out recordings")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--config")
    e.add_argument("--split", choices=("test", "train"), default="test")

    s = sub.add_parser("sweep", help="single emitter/receiver displacement sweep")
    s.add_argument("--medium", choices=("air", "pdms"), default="pdms")
    s.add_argument("--axis", choices=("horizontal", "vertical"), default="horizontal")
    s.add_argument("--range", nargs=2, type=float, default=(-3.0, 3.0), metavar=("START", "STOP"))
    s.add_argument("--step", type=float, default=0.1)
    s.add_argument("--out", required=True)
    s.add_argument("--config")

    b = sub.add_parser("bench", help="synthesis throughput and prediction latency")
    b.add_argument("--config")
    b.add_argument("--model")
    b.add_argument("--frames", type=int, default=5000)

    a = sub.add_parser("pipeline", help="generate, train and eval in one go")
    a.add_argument("--config")
    a.add_argument("--out")
    a.add_argument("--seed", type=int)
    return p


def _output_dir(args, cfg: RunConfig) -> Path:
    out = args.out or cfg.output_dir
    if not out:
        raise UsageError("no output directory: pass --out or set output_dir in the config")
    return Path(out)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            cfg = _resolve_config(args.config)
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
            cmd_generate(cfg, _output_dir(args, cfg))
        elif args.command == "train":
            cmd_train(Path(args.data), Path(args.model), args.config, args.seed)
        elif args.command == "eval":
            cmd_eval(Path(args.data), Path(args.model), Path(args.out), args.split, args.config)
        elif args.command == "sweep":
            cfg = _resolve_config(args.config)
            cmd_sweep(cfg, args.medium, args.axis, args.range[0], args.range[1], args.step, Path(args.out))
        elif args.command == "bench":
            cmd_bench(_resolve_config(args.config), Path(args.model) if args.model else None, args.frames)
        elif args.command == "pipeline":
            cfg = _resolve_config(args.config)
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
            cmd_pipeline(cfg, _output_dir(args, cfg))
    except (ConfigError, UsageError, InvalidRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LedFtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
