"""Radiometric LED-to-LED forward model and the single-pair sweep harness.

Irradiance on a receiver from one emitter follows a generalized Lambertian
law::

    E = S * max(0, cos te)**m * max(0, cos tr)**k * exp(-alpha * r) / r**2

with ``te`` measured from the emitter axis and ``tr`` from the receiver axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import FrozenSet, Optional, Tuple

import numpy as np

from .errors import DegeneratePoseError, InvalidConfigError, InvalidRangeError
from .geometry import N_RECEIVERS, Displacement6, SensorLayout, world_poses

__all__ = [
    "MediumModel",
    "NoiseModel",
    "SignalFrame",
    "AIR",
    "PDMS",
    "cone_exponent_for_half_angle",
    "pair_irradiance",
    "irradiance_frames",
    "frame_signals",
    "synthesize_signals",
    "adc_quantize",
    "sweep_pair",
    "fwhm",
]

MIN_DISTANCE = 1e-6  # mm


def cone_exponent_for_half_angle(half_angle_deg: float) -> float:
    """Exponent ``m`` with ``cos(half_angle)**m == 0.5``."""
    return float(np.log(0.5) / np.log(np.cos(np.radians(half_angle_deg))))


@dataclass(frozen=True)
class MediumModel:
    name: str
    cone_exponent: float
    acceptance_exponent: float = 8.0
    attenuation: float = 0.0  # 1/mm
    intensity_scale: float = 1.6e5  # counts * mm^2
    back_reflection: float = 0.0  # counts, constant offset on every receiver

    def __post_init__(self):
        if self.cone_exponent < 1 or self.acceptance_exponent < 1:
            raise InvalidConfigError("cone and acceptance exponents must be >= 1")
        if self.attenuation < 0:
            raise InvalidConfigError("attenuation must be >= 0")
        if self.intensity_scale <= 0:
            raise InvalidConfigError("intensity_scale must be > 0")


# narrow-cone LED: 10 degree half-power half-angle in air
AIR = MediumModel(name="air", cone_exponent=cone_exponent_for_half_angle(10.0))
PDMS = MediumModel(name="pdms", cone_exponent=18.0, attenuation=0.02)


@dataclass(frozen=True)
class NoiseModel:
    base_std: float = 2.0
    noisy_channels: FrozenSet[int] = frozenset({3, 9, 14, 20})
    noisy_std: float = 10.0
    adc_bits: int = 12

    def __post_init__(self):
        object.__setattr__(self, "noisy_channels", frozenset(int(c) for c in self.noisy_channels))
        if len(self.noisy_channels) != 4:
            raise InvalidConfigError("exactly 4 noisy channels are expected")
        if not all(0 <= c < N_RECEIVERS for c in self.noisy_channels):
            raise InvalidConfigError("noisy channel id out of range")
        if self.base_std < 0:
            raise InvalidConfigError("base_std must be >= 0")
        silent = self.base_std == 0 and self.noisy_std == 0
        if not silent and not self.noisy_std > self.base_std:
            raise InvalidConfigError("noisy_std must exceed base_std")
        if not 1 <= self.adc_bits <= 31:
            raise InvalidConfigError("adc_bits must be in [1, 31]")

    @property
    def full_scale(self) -> int:
        return 2**self.adc_bits - 1

    @property
    def channel_std(self) -> np.ndarray:
        std = np.full(N_RECEIVERS, float(self.base_std))
        std[sorted(self.noisy_channels)] = self.noisy_std
        return std

    @classmethod
    def noiseless(cls, adc_bits: int = 12) -> "NoiseModel":
        return cls(base_std=0.0, noisy_std=0.0, adc_bits=adc_bits)


@dataclass(frozen=True)
class SignalFrame:
    t: float
    signals: np.ndarray = field(repr=False)  # (24,) int64


def _irradiance(pe, ae, pr, ar, medium: MediumModel) -> np.ndarray:
    """Broadcasting core of :func:`pair_irradiance`; no validation."""
    v = pr - pe
    r2 = np.einsum("...i,...i->...", v, v)
    r = np.sqrt(r2)
    cos_e = np.einsum("...i,...i->...", ae, v) / r
    cos_r = -np.einsum("...i,...i->...", ar, v) / r
    out = np.maximum(cos_e, 0.0) ** medium.cone_exponent
    out = out * np.maximum(cos_r, 0.0) ** medium.acceptance_exponent
    if medium.attenuation:
        out = out * np.exp(-medium.attenuation * r)
    return medium.intensity_scale * out / r2


def pair_irradiance(emitter_pose, receiver_pose, medium: MediumModel) -> float:
    """Noise-free irradiance (ADC counts, real valued) for one emitter/receiver pair.

    Each pose is a ``(position, unit_axis)`` pair in mm.
    """
    pe, ae = (np.asarray(a, dtype=float) for a in emitter_pose)
    pr, ar = (np.asarray(a, dtype=float) for a in receiver_pose)
    if np.linalg.norm(pr - pe) < MIN_DISTANCE:
        raise DegeneratePoseError("emitter and receiver closer than 1e-6 mm")
    return float(_irradiance(pe, ae, pr, ar, medium))


@lru_cache(maxsize=32)
def _receiver_emitter_table(layout: SensorLayout) -> np.ndarray:
    """(24, 3) ids of the emitters on the board opposite each receiver."""
    table = []
    for rid in range(N_RECEIVERS):
        board = layout.leds[rid].board
        table.append([l.id for l in layout.leds if l.role == "emitter" and l.board != board])
    out = np.array(table)
    out.flags.writeable = False
    return out


def irradiance_frames(layout: SensorLayout, disps, medium: MediumModel) -> np.ndarray:
    """Noise-free real-valued receiver signals for displacements of shape (..., 6).

    Every receiver collects light from all emitters on the opposite board, so
    bleed between clusters is included.  Returns shape (..., 24).
    """
    pos, ax = world_poses(layout, disps)
    table = _receiver_emitter_table(layout)
    rid = np.arange(N_RECEIVERS)
    pr = pos[..., rid, None, :]
    ar = ax[..., rid, None, :]
    pe = pos[..., table, :]
    ae = ax[..., table, :]
    dist = np.linalg.norm(pr - pe, axis=-1)
    if np.any(dist < MIN_DISTANCE):
        raise DegeneratePoseError("emitter and receiver closer than 1e-6 mm")
    signal = _irradiance(pe, ae, pr, ar, medium).sum(axis=-1)
    return signal + medium.back_reflection


def adc_quantize(value, noise: NoiseModel):
    """Clamp to ``[0, full_scale]`` and round half to even.

    Scalars give a Python int, arrays an int64 array.
    """
    q = np.rint(np.clip(value, 0, noise.full_scale)).astype(np.int64)
    return int(q) if np.ndim(q) == 0 else q


def synthesize_signals(
    layout: SensorLayout,
    disps: np.ndarray,
    medium: MediumModel,
    noise: NoiseModel,
    rng: Optional[np.random.Generator],
) -> np.ndarray:
    """Quantized 24-channel signals for a batch of displacements (N, 6) -> (N, 24).

    Noise is drawn as one ``(N, 24)`` standard-normal block, which consumes the
    stream exactly as ``N`` consecutive single-frame draws would.
    """
    disps = np.atleast_2d(np.asarray(disps, dtype=float))
    clean = irradiance_frames(layout, disps, medium)
    std = noise.channel_std
    if np.any(std > 0):
        if rng is None:
            raise ValueError("a random generator is required when noise is enabled")
        clean = clean + rng.standard_normal(clean.shape) * std
    return adc_quantize(clean, noise)


def frame_signals(
    layout: SensorLayout,
    disp: Displacement6,
    medium: MediumModel,
    noise: NoiseModel,
    rng: Optional[np.random.Generator],
    t: float,
) -> SignalFrame:
    signals = synthesize_signals(layout, disp.as_vector()[None, :], medium, noise, rng)[0]
    return SignalFrame(t=float(t), signals=signals)


def _sweep_offsets(start: float, stop: float, step: float) -> np.ndarray:
    if not step > 0:
        raise InvalidRangeError(f"step must be > 0, got {step}")
    if not (np.isfinite(start) and np.isfinite(stop)) or stop <= start:
        raise InvalidRangeError(f"empty sweep range [{start}, {stop}]")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    # rounding keeps mirrored offsets exact negatives of each other
    return np.round(start + step * np.arange(n), 12) + 0.0


def sweep_pair(
    medium: MediumModel,
    axis: str,
    range_mm: Tuple[float, float],
    step: float,
    gap: float = 6.0,
) -> np.ndarray:
    """Noise-free profile of one coaxial emitter/receiver pair as the receiver moves.

    ``horizontal`` offsets the receiver perpendicular to the emitter axis at
    separation ``gap``; ``vertical`` changes the separation to ``gap + offset``.
    Returns an array of shape (n, 2): ``offset_mm, irradiance``.
    """
    offsets = _sweep_offsets(float(range_mm[0]), float(range_mm[1]), float(step))
    n = offsets.size
    pe = np.zeros((n, 3))
    ae = np.tile([0.0, 0.0, 1.0], (n, 1))
    ar = np.tile([0.0, 0.0, -1.0], (n, 1))
    pr = np.zeros((n, 3))
    if axis == "horizontal":
        pr[:, 0] = offsets
        pr[:, 2] = gap
    elif axis == "vertical":
        if np.any(gap + offsets < MIN_DISTANCE):
            raise InvalidRangeError("vertical sweep reaches zero separation")
        pr[:, 2] = gap + offsets
    else:
        raise InvalidRangeError(f"unknown sweep axis {axis!r}")
    values = _irradiance(pe, ae, pr, ar, medium)
    return np.column_stack([offsets, values])


def fwhm(profile: np.ndarray) -> float:
    """Full width at half maximum of an ``(offset, value)`` profile.

    Crossings are located by linear interpolation; a profile that never drops
    below half maximum on one side reports the sampled extent on that side.
    """
    x, y = profile[:, 0], profile[:, 1]
    peak = int(np.argmax(y))
    half = y[peak] / 2.0
    left = x[0]
    for i in range(peak, 0, -1):
        if y[i - 1] < half:
            left = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
            break
    right = x[-1]
    for i in range(peak, len(x) - 1):
        if y[i + 1] < half:
            right = x[i] + (y[i] - half) * (x[i + 1] - x[i]) / (y[i] - y[i + 1])
            break
    return float(right - left)


def profile_to_csv(profile: np.ndarray) -> str:
    lines = ["offset_mm,irradiance"]
    lines += [f"{o!r},{v!r}" for o, v in profile.tolist()]
    return "\n".join(lines) + "\n"
