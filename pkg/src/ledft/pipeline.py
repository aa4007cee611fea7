"""Signal preprocessing: median filtering, baseline deltas, no-contact handling,
channel dropping, window stacking and normalization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .datagen import DataFile
from .errors import EmptyOutputError, InsufficientFramesError, InvalidConfigError, InvalidWidthError, ShapeMismatchError
from .geometry import N_RECEIVERS

__all__ = [
    "PipelineConfig",
    "Normalizer",
    "ProcessedDataset",
    "median_filter",
    "compute_baseline",
    "file_deltas",
    "preprocess",
    "stack_windows",
    "dataset_to_csv",
]

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class PipelineConfig:
    signal_filter_width: int = 45
    label_filter_width: int = 13
    no_contact_threshold: float = 0.1  # N
    no_contact_fraction: float = 0.10
    baseline_frames: int = 50
    window: int = 4
    dropped_channels: FrozenSet[int] = frozenset({3, 9, 14, 20})
    downsample_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dropped_channels", frozenset(int(c) for c in self.dropped_channels))
        for name in ("signal_filter_width", "label_filter_width"):
            w = getattr(self, name)
            if w < 1 or w % 2 == 0:
                raise InvalidConfigError(f"{name} must be odd and >= 1, got {w}")
        if not 0 < self.no_contact_fraction <= 1:
            raise InvalidConfigError("no_contact_fraction must be in (0, 1]")
        if self.window < 1 or self.baseline_frames < 1:
            raise InvalidConfigError("window and baseline_frames must be >= 1")
        if not all(0 <= c < N_RECEIVERS for c in self.dropped_channels):
            raise InvalidConfigError("dropped channel id out of range")
        if len(self.dropped_channels) >= N_RECEIVERS:
            raise InvalidConfigError("cannot drop every channel")

    @property
    def kept_channels(self) -> np.ndarray:
        return np.array([c for c in range(N_RECEIVERS) if c not in self.dropped_channels])

    @property
    def n_features(self) -> int:
        return self.window * len(self.kept_channels)


@dataclass(eq=False)
class Normalizer:
    """Per-column standardization of features and labels."""

    feature_mean: np.ndarray
    feature_std: np.ndarray
    label_mean: np.ndarray
    label_std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray, labels: np.ndarray) -> "Normalizer":
        def stats(a):
            mean = a.mean(axis=0)
            std = a.std(axis=0)
            # constant columns (e.g. Fz under horizontal pushes) pass through unscaled
            std = np.where(std > STD_FLOOR, std, 1.0)
            return mean, std

        fm, fs = stats(features)
        lm, ls = stats(labels)
        return cls(fm, fs, lm, ls)

    def normalize_features(self, x: np.ndarray) -> np.ndarray:
        return (x - self.feature_mean) / self.feature_std

    def normalize_labels(self, y: np.ndarray) -> np.ndarray:
        return (y - self.label_mean) / self.label_std

    def denormalize_labels(self, y: np.ndarray) -> np.ndarray:
        return y * self.label_std + self.label_mean

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature_mean", "feature_std", "label_mean", "label_std")}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(*(np.asarray(d[k], dtype=float) for k in ("feature_mean", "feature_std", "label_mean", "label_std")))

    def copy(self) -> "Normalizer":
        return Normalizer.from_dict(self.to_dict())


@dataclass(eq=False)
class ProcessedDataset:
    features: np.ndarray  # (rows, window * kept), normalized
    labels: np.ndarray  # (rows, 6), normalized
    provenance: np.ndarray  # (rows, 2): file index, frame index
    contact: np.ndarray  # (rows,) bool

    def __len__(self) -> int:
        return self.features.shape[0]


def median_filter(series, width: int) -> np.ndarray:
    """Centred sliding median with replicated edges; filters along axis 0.

    Accepts a 1-D series or a (frames, channels) array.
    """
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    if width < 1 or width % 2 == 0 or width > 2 * n:
        raise InvalidWidthError(f"median width must be odd, >= 1 and <= {2 * n}; got {width}")
    if width == 1:
        return x.copy()
    size = (width,) + (1,) * (x.ndim - 1)
    return ndimage.median_filter(x, size=size, mode="nearest")


def compute_baseline(file: DataFile, n: int = 50) -> np.ndarray:
    """Per-channel mean of the first ``n`` (contact-free) frames."""
    if n < 1 or len(file) < n:
        raise InsufficientFramesError(f"{file.file_id}: need {n} frames for the baseline, have {len(file)}")
    return file.signals[:n].mean(axis=0)


def file_deltas(file: DataFile, cfg: PipelineConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Filtered baseline deltas of kept channels, filtered labels, contact mask."""
    baseline = compute_baseline(file, cfg.baseline_frames)
    signals = median_filter(file.signals.astype(float), cfg.signal_filter_width)
    delta = (signals - baseline)[:, cfg.kept_channels]
    labels = median_filter(file.wrenches, cfg.label_filter_width)
    contact = np.linalg.norm(labels[:, :3], axis=1) >= cfg.no_contact_threshold
    labels[~contact] = 0.0
    return delta, labels, contact


def stack_windows(delta: np.ndarray, window: int, rows: Optional[np.ndarray] = None) -> np.ndarray:
    """Concatenate frames ``i-window+1 .. i`` (oldest first) into one row per ``i``.

    ``rows`` selects frame indices (each >= window - 1); default all valid ones.
    """
    if rows is None:
        rows = np.arange(window - 1, delta.shape[0])
    offsets = np.arange(-window + 1, 1)
    return delta[rows[:, None] + offsets].reshape(len(rows), -1)


def preprocess(
    files: Sequence[DataFile],
    cfg: Optional[PipelineConfig] = None,
    normalizer: Optional[Normalizer] = None,
) -> Tuple[ProcessedDataset, Normalizer]:
    """Turn recordings into normalized windowed features and labels.

    Without a ``normalizer`` the call is in training mode: no-contact rows are
    down-sampled to at most ``no_contact_fraction`` of the output and a new
    normalizer is fitted.  With one (test mode) every row is kept and the
    given statistics are applied unchanged.
    """
    cfg = cfg or PipelineConfig()
    training = normalizer is None
    if not training and normalizer.feature_mean.shape != (cfg.n_features,):
        raise ShapeMismatchError(
            f"data yields {cfg.n_features} features per row but the model expects {normalizer.feature_mean.size}"
        )
    per_file = [file_deltas(f, cfg) for f in files]

    first = cfg.window - 1
    candidates = []  # (file index, frame index, contact)
    for k, (delta, _, contact) in enumerate(per_file):
        idx = np.arange(first, delta.shape[0])
        candidates.append(np.column_stack([np.full(idx.size, k), idx, contact[idx]]))
    cand = np.vstack(candidates) if candidates else np.zeros((0, 3), dtype=int)

    if training and cand.shape[0]:
        is_contact = cand[:, 2].astype(bool)
        n_contact = int(is_contact.sum())
        rest = np.nonzero(~is_contact)[0]
        f = cfg.no_contact_fraction
        if f >= 1:
            n_keep = rest.size
        elif n_contact:
            n_keep = min(rest.size, int(np.floor(f * n_contact / (1 - f))))
        else:
            n_keep = int(np.floor(f * rest.size))
        rng = np.random.default_rng(cfg.downsample_seed)
        kept_rest = rng.choice(rest, size=n_keep, replace=False)
        keep = np.sort(np.concatenate([np.nonzero(is_contact)[0], kept_rest]))
        cand = cand[keep]

    if cand.shape[0] == 0:
        raise EmptyOutputError("preprocessing produced no rows")

    feats, labels = [], []
    for k, (delta, lab, _) in enumerate(per_file):
        rows = cand[cand[:, 0] == k, 1]
        feats.append(stack_windows(delta, cfg.window, rows))
        labels.append(lab[rows])
    x = np.vstack(feats)
    y = np.vstack(labels)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values after preprocessing")

    if training:
        normalizer = Normalizer.fit(x, y)
    ds = ProcessedDataset(
        features=normalizer.normalize_features(x),
        labels=normalizer.normalize_labels(y),
        provenance=cand[:, :2].astype(np.int64),
        contact=cand[:, 2].astype(bool),
    )
    return ds, normalizer


def dataset_to_csv(ds: ProcessedDataset) -> str:
    """Normalized rows as CSV: ``f000..fNNN`` feature columns then the six labels."""
    cols = [f"f{i:03d}" for i in range(ds.features.shape[1])] + ["fx", "fy", "fz", "tx", "ty", "tz"]
    lines = [",".join(cols)]
    for row in np.hstack([ds.features, ds.labels]).tolist():
        lines.append(",".join(map(repr, row)))
    return "\n".join(lines) + "\n"
