"""Shared-trunk, six-head feed-forward regressor written directly in numpy.

The three trunk layers are dense + ReLU.  Each of the six heads is a
64-32-1 stack with ReLU on every layer but the last.  Head parameters are
stored stacked along a leading head axis so that all heads run as one batched
matmul.  Weight matrices are ``(out, in)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DivergenceError, InvalidConfigError, ShapeMismatchError
from .mechanics import Wrench
from .pipeline import Normalizer, PipelineConfig, ProcessedDataset

__all__ = [
    "MlpParams",
    "TrainConfig",
    "TrainedModel",
    "AdamState",
    "init_params",
    "forward",
    "loss_and_gradients",
    "adam_init",
    "adam_step",
    "train",
    "predict",
    "save_model",
    "load_model",
    "model_to_json",
    "model_from_json",
]

Layer = Tuple[np.ndarray, np.ndarray]


@dataclass(eq=False)
class MlpParams:
    trunk: List[Layer]  # W (out, in), b (out,)
    heads: List[Layer]  # W (n_heads, out, in), b (n_heads, out)

    @property
    def input_dim(self) -> int:
        return self.trunk[0][0].shape[1]

    @property
    def n_heads(self) -> int:
        return self.heads[0][0].shape[0]

    def arrays(self) -> List[np.ndarray]:
        """All tensors in a fixed order: trunk W/b pairs, then head W/b pairs."""
        return [a for layer in self.trunk + self.heads for a in layer]

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        it = iter(arrays)
        trunk = [(next(it), next(it)) for _ in self.trunk]
        heads = [(next(it), next(it)) for _ in self.heads]
        return MlpParams(trunk, heads)

    def copy(self) -> "MlpParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def dims(self) -> dict:
        return {
            "input": self.input_dim,
            "trunk": [w.shape[0] for w, _ in self.trunk],
            "head": [w.shape[1] for w, _ in self.heads],
            "n_heads": self.n_heads,
        }


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 2000
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    trunk: Tuple[int, ...] = (128, 128, 128)
    head: Tuple[int, ...] = (64, 32, 1)
    dtype: str = "float64"

    def __post_init__(self):
        object.__setattr__(self, "trunk", tuple(int(v) for v in self.trunk))
        object.__setattr__(self, "head", tuple(int(v) for v in self.head))
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise InvalidConfigError("epochs, batch_size and learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_epsilon > 0):
            raise InvalidConfigError("invalid Adam hyper-parameters")
        if self.head[-1] != 1 or not self.trunk:
            raise InvalidConfigError("heads must end in a single output and the trunk must be non-empty")
        if self.dtype not in ("float64", "float32"):
            raise InvalidConfigError("dtype must be float64 or float32")


@dataclass(eq=False)
class TrainedModel:
    params: MlpParams
    normalizer: Normalizer
    config: TrainConfig = field(default_factory=TrainConfig)
    loss_curve: List[float] = field(default_factory=list)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    extra: dict = field(default_factory=dict)


def init_params(
    rng: np.random.Generator,
    input_dim: int = 80,
    trunk: Sequence[int] = (128, 128, 128),
    head: Sequence[int] = (64, 32, 1),
    n_heads: int = 6,
    dtype=np.float64,
) -> MlpParams:
    """He-normal weights (std ``sqrt(2 / fan_in)``) and zero biases."""
    layers = []
    fan_in = input_dim
    for width in trunk:
        w = rng.standard_normal((width, fan_in)) * np.sqrt(2.0 / fan_in)
        layers.append((w.astype(dtype), np.zeros(width, dtype=dtype)))
        fan_in = width
    heads = []
    for width in head:
        w = rng.standard_normal((n_heads, width, fan_in)) * np.sqrt(2.0 / fan_in)
        heads.append((w.astype(dtype), np.zeros((n_heads, width), dtype=dtype)))
        fan_in = width
    return MlpParams(layers, heads)


def _forward_cache(params: MlpParams, x: np.ndarray):
    pre, acts = [], [x]
    a = x
    for w, b in params.trunk:
        z = a @ w.T + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    h = a
    last = len(params.heads) - 1
    for j, (w, b) in enumerate(params.heads):
        z = np.matmul(h, w.transpose(0, 2, 1)) + b[:, None, :]  # (heads, B, out)
        pre.append(z)
        h = z if j == last else np.maximum(z, 0.0)
        acts.append(h)
    return pre, acts


def _check_input(params: MlpParams, x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim not in (1, 2) or x.shape[-1] != params.input_dim:
        raise ShapeMismatchError(f"expected input width {params.input_dim}, got shape {x.shape}")
    return x


_FORWARD_CHUNK = 16384


def forward(params: MlpParams, x) -> np.ndarray:
    """Outputs in normalized label units: (n_heads,) for one row, (B, n_heads) for a batch."""
    x = _check_input(params, x)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    # Chunked so large evaluation sets do not hold every activation at once.
    out = np.empty((x.shape[0], params.n_heads))
    for start in range(0, x.shape[0], _FORWARD_CHUNK):
        _, acts = _forward_cache(params, x[start : start + _FORWARD_CHUNK])
        out[start : start + _FORWARD_CHUNK] = acts[-1][..., 0].T
    return out[0] if single else out


def loss_and_gradients(params: MlpParams, x, y) -> Tuple[float, MlpParams]:
    """Mean squared error over batch and outputs, with its exact gradients."""
    x = _check_input(params, np.atleast_2d(x))
    y = np.atleast_2d(np.asarray(y))
    if y.shape != (x.shape[0], params.n_heads):
        raise ShapeMismatchError(f"labels shape {y.shape} does not match ({x.shape[0]}, {params.n_heads})")
    pre, acts = _forward_cache(params, x)
    n_trunk = len(params.trunk)
    resid = acts[-1][..., 0].T - y  # (B, heads)
    loss = float(np.mean(resid**2))

    d = (2.0 / resid.size) * resid.T[..., None]  # (heads, B, 1)
    head_grads = [None] * len(params.heads)
    for j in range(len(params.heads) - 1, -1, -1):
        w, _ = params.heads[j]
        h_in = acts[n_trunk + j]
        head_grads[j] = (np.matmul(d.transpose(0, 2, 1), h_in), d.sum(axis=1))
        d = np.matmul(d, w)
        if j > 0:
            d = d * (pre[n_trunk + j - 1] > 0)
    d = d.sum(axis=0)  # every head feeds back into the shared trunk
    trunk_grads = [None] * n_trunk
    for i in range(n_trunk - 1, -1, -1):
        d = d * (pre[i] > 0)
        w, _ = params.trunk[i]
        trunk_grads[i] = (d.T @ acts[i], d.sum(axis=0))
        if i > 0:
            d = d @ w
    return loss, MlpParams(trunk_grads, head_grads)


@dataclass(eq=False)
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]


def adam_init(params: MlpParams) -> AdamState:
    return AdamState([np.zeros_like(a) for a in params.arrays()], [np.zeros_like(a) for a in params.arrays()])


def adam_step(
    state: AdamState, params: MlpParams, grads: MlpParams, t: int, cfg: TrainConfig
) -> Tuple[AdamState, MlpParams]:
    """One bias-corrected Adam update; returns new state and parameters."""
    if t < 1:
        raise ValueError("Adam step index starts at 1")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        p = p - cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_epsilon)
        new_m.append(m)
        new_v.append(v)
        new_p.append(p)
    return AdamState(new_m, new_v), params.with_arrays(new_p)


def train(
    dataset: ProcessedDataset,
    cfg: Optional[TrainConfig] = None,
    normalizer: Optional[Normalizer] = None,
    init: Optional[MlpParams] = None,
    pipeline: Optional[PipelineConfig] = None,
    log=None,
) -> TrainedModel:
    """Minibatch Adam on the mean squared error.

    Each epoch visits a fresh permutation of all rows; the final partial
    batch is kept.  ``log(epoch, loss)`` is called after every epoch.
    Raises :class:`DivergenceError` when the loss stops being finite.
    """
    cfg = cfg or TrainConfig()
    n = len(dataset)
    if n == 0:
        raise ValueError("empty training set")
    dtype = np.dtype(cfg.dtype)
    x = dataset.features.astype(dtype, copy=False)
    y = dataset.labels.astype(dtype, copy=False)
    if init is None:
        params = init_params(
            np.random.default_rng([cfg.seed, 0]), x.shape[1], cfg.trunk, cfg.head, y.shape[1], dtype
        )
    else:
        params = init.copy()
    shuffle = np.random.default_rng([cfg.seed, 1])
    state = adam_init(params)
    step = 0
    curve = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = loss_and_gradients(params, x[idx], y[idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            step += 1
            state, params = adam_step(state, params, grads, step, cfg)
            total += loss * idx.size
        epoch_loss = total / n
        curve.append(epoch_loss)
        if log is not None:
            log(epoch, epoch_loss)
    if normalizer is None:
        dim_x, dim_y = x.shape[1], y.shape[1]
        normalizer = Normalizer(np.zeros(dim_x), np.ones(dim_x), np.zeros(dim_y), np.ones(dim_y))
    return TrainedModel(params, normalizer, cfg, curve, pipeline or PipelineConfig())


def predict(model: TrainedModel, window):
    """Wrench in physical units from baseline-delta window(s).

    ``window`` is one window, shaped (window, channels) or flat, giving a
    :class:`Wrench`; or a batch (B, window, channels) / (B, features), giving
    a (B, 6) array.
    """
    x = np.asarray(window, dtype=float)
    width = model.params.input_dim
    if x.ndim == 1 or (x.ndim == 2 and x.shape[-1] != width):
        flat = x.reshape(-1)
        if flat.size != width:
            raise ShapeMismatchError(f"window has {flat.size} values, model expects {width}")
        y = forward(model.params, model.normalizer.normalize_features(flat))
        return Wrench.from_vector(model.normalizer.denormalize_labels(y))
    x = x.reshape(x.shape[0], -1)
    if x.shape[1] != width:
        raise ShapeMismatchError(f"windows have {x.shape[1]} values, model expects {width}")
    y = forward(model.params, model.normalizer.normalize_features(x))
    return model.normalizer.denormalize_labels(y)


def model_to_json(model: TrainedModel) -> str:
    p = model.params
    doc = {
        "dims": p.dims(),
        "trunk": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in p.trunk],
        "heads": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in p.heads],
        "normalizer": model.normalizer.to_dict(),
        "train_config": asdict(model.config),
        "pipeline_config": _pipeline_to_dict(model.pipeline),
        "loss_curve": list(model.loss_curve),
        "extra": model.extra,
    }
    return json.dumps(doc, sort_keys=True)


def _pipeline_to_dict(cfg: PipelineConfig) -> dict:
    d = asdict(cfg)
    d["dropped_channels"] = sorted(cfg.dropped_channels)
    return d


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    trunk = [(np.asarray(l["weight"], dtype=float), np.asarray(l["bias"], dtype=float)) for l in doc["trunk"]]
    heads = [(np.asarray(l["weight"], dtype=float), np.asarray(l["bias"], dtype=float)) for l in doc["heads"]]
    params = MlpParams(trunk, heads)
    if params.dims() != doc["dims"]:
        raise ShapeMismatchError("model dims do not match stored weights")
    return TrainedModel(
        params=params,
        normalizer=Normalizer.from_dict(doc["normalizer"]),
        config=TrainConfig(**doc["train_config"]),
        loss_curve=[float(v) for v in doc["loss_curve"]],
        pipeline=PipelineConfig(**doc["pipeline_config"]),
        extra=doc.get("extra", {}),
    )


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model_to_json(model) + "\n")
    return path


def load_model(path) -> TrainedModel:
    return model_from_json(Path(path).read_text())
