"""Digital twin of an LED-based six-axis force/torque sensor and its neural calibration."""

from .geometry import Displacement6, LayoutConfig, SensorLayout, build_layout, led_world_pose
from .optics import AIR, PDMS, MediumModel, NoiseModel, SignalFrame, frame_signals, pair_irradiance, sweep_pair
from .mechanics import ComplianceModel, ContactEvent, FingerConfig, Wrench, default_compliance
from .datagen import DataFile, ProtocolConfig, Twin, generate_dataset
from .pipeline import Normalizer, PipelineConfig, ProcessedDataset, preprocess
from .model import TrainConfig, TrainedModel, predict, train
from .evaluation import MetricsReport, compute_metrics, render_report

from .config import RunConfig, load_config

__all__ = [
    "Displacement6", "LayoutConfig", "SensorLayout", "build_layout", "led_world_pose",
    "AIR", "PDMS", "MediumModel", "NoiseModel", "SignalFrame", "frame_signals", "pair_irradiance", "sweep_pair",
    "ComplianceModel", "ContactEvent", "FingerConfig", "Wrench", "default_compliance",
    "DataFile", "ProtocolConfig", "Twin", "generate_dataset",
    "Normalizer", "PipelineConfig", "ProcessedDataset", "preprocess",
    "TrainConfig", "TrainedModel", "predict", "train",
    "MetricsReport", "compute_metrics", "render_report",
    "RunConfig", "load_config",
]

__version__ = "0.1.0"
