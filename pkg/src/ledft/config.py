"""Single-document JSON run configuration with strict validation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .datagen import ProtocolConfig, Twin
from .errors import ConfigError
from .geometry import LayoutConfig
from .mechanics import ComplianceModel, FingerConfig, default_compliance
from .model import TrainConfig
from .optics import AIR, PDMS, MediumModel, NoiseModel
from .pipeline import PipelineConfig

__all__ = ["RunConfig", "load_config", "canonical_json", "sha256_text"]

SECTIONS = ("geometry", "medium", "noise", "compliance", "finger", "protocol", "pipeline", "train", "eval")
DATASET_SECTIONS = ("geometry", "medium", "noise", "compliance", "finger", "protocol")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _build(cls, data: Optional[dict], section: str, exclude: Tuple[str, ...] = ()):
    data = dict(data or {})
    allowed = {f.name for f in dataclasses.fields(cls)} - set(exclude)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(unknown)}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section}' section: {exc}") from None


def _plain(obj) -> Any:
    """JSON-ready view of config values (frozensets sorted, tuples as lists)."""
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (frozenset, set)):
        return sorted(obj)
    if isinstance(obj, (tuple, list)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


@dataclass(frozen=True)
class EvalConfig:
    force_bins: Tuple[float, ...] = tuple(np.linspace(0.0, 2.5, 11).tolist())
    torque_bins: Tuple[float, ...] = tuple(np.linspace(0.0, 250.0, 21).tolist())

    def __post_init__(self):
        for name in ("force_bins", "torque_bins"):
            edges = tuple(float(v) for v in getattr(self, name))
            if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
                raise ConfigError(f"eval.{name} must be strictly increasing")
            object.__setattr__(self, name, edges)


@dataclass(frozen=True)
class RunConfig:
    geometry: LayoutConfig = field(default_factory=LayoutConfig)
    medium: MediumModel = PDMS
    media: Dict[str, MediumModel] = field(default_factory=lambda: {"air": AIR, "pdms": PDMS})
    noise: NoiseModel = field(default_factory=NoiseModel)
    compliance: ComplianceModel = field(default_factory=default_compliance)
    finger: FingerConfig = field(default_factory=FingerConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    output_dir: Optional[str] = None

    @property
    def twin(self) -> Twin:
        return Twin(self.geometry, self.medium, self.noise, self.compliance, self.finger)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = sorted(set(doc) - set(SECTIONS) - {"seed", "output_dir"})
        if unknown:
            raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
        kw: Dict[str, Any] = {}
        kw["geometry"] = _build(LayoutConfig, doc.get("geometry"), "geometry")

        med = dict(doc.get("medium") or {})
        active = med.pop("active", "pdms")
        unknown = sorted(set(med) - {"air", "pdms"})
        if unknown:
            raise ConfigError(f"unknown key(s) in 'medium': {', '.join(unknown)}")
        media = {}
        for name, base in (("air", AIR), ("pdms", PDMS)):
            merged = {**_plain(base), **(med.get(name) or {})}
            merged["name"] = name
            media[name] = _build(MediumModel, merged, f"medium.{name}")
        if active not in media:
            raise ConfigError(f"medium.active must be 'air' or 'pdms', got {active!r}")
        if not media["pdms"].cone_exponent < media["air"].cone_exponent:
            raise ConfigError("pdms cone must be wider (smaller exponent) than air")
        if not media["pdms"].attenuation > media["air"].attenuation == 0:
            raise ConfigError("expected air attenuation 0 and a positive pdms attenuation")
        kw["media"] = media
        kw["medium"] = media[active]

        kw["noise"] = _build(NoiseModel, doc.get("noise"), "noise")

        comp = dict(doc.get("compliance") or {})
        unknown = sorted(set(comp) - {"shear", "axial", "rotational", "matrix", "tau_relax"})
        if unknown:
            raise ConfigError(f"unknown key(s) in 'compliance': {', '.join(unknown)}")
        try:
            if comp.get("matrix") is not None:
                kw["compliance"] = ComplianceModel(np.asarray(comp["matrix"], dtype=float), comp.get("tau_relax", 0.0))
            else:
                comp.pop("matrix", None)
                kw["compliance"] = default_compliance(**comp)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid 'compliance' section: {exc}") from None

        kw["finger"] = _build(FingerConfig, doc.get("finger"), "finger")
        kw["protocol"] = _build(ProtocolConfig, doc.get("protocol"), "protocol")
        kw["pipeline"] = _build(PipelineConfig, doc.get("pipeline"), "pipeline")
        kw["train"] = _build(TrainConfig, doc.get("train"), "train")
        kw["eval"] = _build(EvalConfig, doc.get("eval"), "eval")
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        kw["seed"] = seed
        kw["output_dir"] = doc.get("output_dir")
        return cls(**kw)

    def to_dict(self) -> dict:
        comp = {"matrix": self.compliance.C.tolist(), "tau_relax": self.compliance.tau_relax}
        media = {"active": self.medium.name}
        for name, m in self.media.items():
            d = _plain(m)
            d.pop("name")
            media[name] = d
        return {
            "geometry": _plain(self.geometry),
            "medium": media,
            "noise": _plain(self.noise),
            "compliance": comp,
            "finger": _plain(self.finger),
            "protocol": _plain(self.protocol),
            "pipeline": _plain(self.pipeline),
            "train": _plain(self.train),
            "eval": _plain(self.eval),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, seed=int(seed))

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        return sha256_text(canonical_json(d))

    def dataset_hash(self) -> str:
        d = self.to_dict()
        return sha256_text(canonical_json({k: d[k] for k in DATASET_SECTIONS + ("seed",)}))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(doc)
