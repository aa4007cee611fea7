"""Contact loads on the mounted finger and the elastic response of the flexure."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidConfigError, OverloadError
from .geometry import MAX_ROTATION, Displacement6

__all__ = [
    "Wrench",
    "ComplianceModel",
    "FingerConfig",
    "ContactEvent",
    "default_compliance",
    "force_profile",
    "wrench_from_contact",
    "wrench_series",
    "displacement_from_wrench",
    "displacements_from_wrenches",
    "relax_step",
    "relax_series",
]

OVERLOAD_FRACTION = 0.9


@dataclass(frozen=True)
class Wrench:
    f: Tuple[float, float, float] = (0.0, 0.0, 0.0)  # N
    tau: Tuple[float, float, float] = (0.0, 0.0, 0.0)  # N*mm

    def as_vector(self) -> np.ndarray:
        return np.array(tuple(self.f) + tuple(self.tau), dtype=float)

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "Wrench":
        v = [float(x) for x in v]
        return cls(tuple(v[:3]), tuple(v[3:6]))


@dataclass(frozen=True, eq=False)
class ComplianceModel:
    """Linear map from wrench (N, N*mm) to displacement (mm, rad)."""

    C: np.ndarray
    tau_relax: float = 0.0  # s, 0 disables relaxation

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        if C.shape != (6, 6):
            raise InvalidConfigError("compliance matrix must be 6x6")
        if not np.allclose(C, C.T, rtol=0, atol=1e-15 * np.abs(C).max()):
            raise InvalidConfigError("compliance matrix must be symmetric")
        eig = np.linalg.eigvalsh(C)
        if eig.min() <= 0:
            raise InvalidConfigError("compliance matrix must be positive definite")
        if eig.max() / eig.min() >= 1e6:
            raise InvalidConfigError("compliance matrix is ill-conditioned")
        if self.tau_relax < 0:
            raise InvalidConfigError("tau_relax must be >= 0")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)


def default_compliance(
    shear: float = 0.2, axial: float = 0.1, rotational: float = 2e-4, tau_relax: float = 0.0
) -> ComplianceModel:
    return ComplianceModel(np.diag([shear, shear, axial, rotational, rotational, rotational]), tau_relax)


@dataclass(frozen=True)
class FingerConfig:
    """Rigid cylindrical finger mounted on the top plate (mm)."""

    radius: float = 8.0
    length: float = 100.0
    heights: Tuple[float, float, float] = (85.0, 50.0, 15.0)  # top, middle, bottom

    def __post_init__(self):
        object.__setattr__(self, "heights", tuple(float(h) for h in self.heights))
        if self.radius <= 0 or self.length <= 0:
            raise InvalidConfigError("finger radius and length must be > 0")
        if len(self.heights) != 3 or not all(0 <= h <= self.length for h in self.heights):
            raise InvalidConfigError("finger needs three contact heights within its length")


@dataclass(frozen=True)
class ContactEvent:
    azimuth: float  # rad
    height: float  # mm above the top plate
    peak_force: float  # N
    t_start: float  # s
    ramp: float = 0.3  # s
    hold: float = 3.0  # s, whole push including both ramps
    finger_radius: float = 8.0  # mm
    group: str = ""

    def __post_init__(self):
        if not self.peak_force > 0:
            raise InvalidConfigError("peak_force must be > 0")
        if not 2.0 <= self.hold <= 5.0:
            raise InvalidConfigError(f"hold must be within [2, 5] s, got {self.hold}")
        if not 0.0 <= self.azimuth < 2 * np.pi:
            raise InvalidConfigError("azimuth must lie in [0, 2*pi)")
        if not 0 <= 2 * self.ramp <= self.hold:
            raise InvalidConfigError("ramps must fit inside the push duration")

    @property
    def t_end(self) -> float:
        return self.t_start + self.hold


def force_profile(c: ContactEvent, t) -> np.ndarray:
    """Trapezoidal force magnitude over ``[t_start, t_start + hold]``.

    Linear ramp up over ``ramp``, plateau at ``peak_force``, linear ramp down.
    """
    t = np.asarray(t, dtype=float)
    peak, ramp = c.peak_force, c.ramp
    t1 = c.t_start + ramp
    t3 = c.t_start + c.hold
    t2 = t3 - ramp
    out = np.zeros_like(t)
    if ramp > 0:
        up = (t >= c.t_start) & (t < t1)
        out[up] = peak * (t[up] - c.t_start) / ramp
        down = (t > t2) & (t < t3)
        out[down] = peak * (t3 - t[down]) / ramp
    out[(t >= t1) & (t <= t2)] = peak
    return out


def _contact_wrenches(c: ContactEvent, magnitude: np.ndarray) -> np.ndarray:
    u = np.array([np.cos(c.azimuth), np.sin(c.azimuth), 0.0])
    lever = np.array([c.finger_radius * u[0], c.finger_radius * u[1], c.height])
    f = -magnitude[:, None] * u
    return np.hstack([f, np.cross(lever, f)])


def wrench_from_contact(c: ContactEvent, t: float) -> Wrench:
    """Horizontal, radially inward push applied at the contact point on the finger.

    Torque about the sensor origin is ``lever x f`` with the lever from the
    sensor centre to the contact point.
    """
    mag = force_profile(c, np.array([float(t)]))
    return Wrench.from_vector(_contact_wrenches(c, mag)[0])


def wrench_series(contacts: Iterable[ContactEvent], t: np.ndarray) -> np.ndarray:
    """Summed wrench of all contacts at each time in ``t``; shape (len(t), 6)."""
    t = np.asarray(t, dtype=float)
    total = np.zeros((t.size, 6))
    for c in contacts:
        mag = force_profile(c, t)
        active = mag > 0
        if np.any(active):
            total[active] += _contact_wrenches(c, mag[active])
    return total


def _check_overload(disp: np.ndarray, plate_gap: float) -> None:
    trans = np.linalg.norm(disp[..., :3], axis=-1)
    rot = np.linalg.norm(disp[..., 3:], axis=-1)
    limit = OVERLOAD_FRACTION * plate_gap
    if np.any(trans > limit):
        raise OverloadError(f"translation {trans.max():.3g} mm exceeds {limit:.3g} mm")
    if np.any(rot >= MAX_ROTATION):
        raise OverloadError(f"rotation {rot.max():.3g} rad leaves the small-angle regime")


def displacements_from_wrenches(m: ComplianceModel, wrenches: np.ndarray, plate_gap: float = 6.0) -> np.ndarray:
    """Batched ``C @ w`` for wrench rows of shape (N, 6)."""
    w = np.asarray(wrenches, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("wrench must be finite")
    disp = w @ m.C.T
    _check_overload(disp, plate_gap)
    return disp


def displacement_from_wrench(m: ComplianceModel, w: Wrench, plate_gap: float = 6.0) -> Displacement6:
    d = displacements_from_wrenches(m, w.as_vector()[None, :], plate_gap)[0]
    return Displacement6.from_vector(d)


def relax_step(m: ComplianceModel, state: Displacement6, target: Displacement6, dt: float) -> Displacement6:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if m.tau_relax == 0:
        return target
    tgt = target.as_vector()
    out = tgt + (state.as_vector() - tgt) * np.exp(-dt / m.tau_relax)
    return Displacement6.from_vector(out)


def relax_series(m: ComplianceModel, targets: np.ndarray, dt: float, initial: Optional[np.ndarray] = None) -> np.ndarray:
    """Apply :func:`relax_step` sequentially along rows of ``targets`` (N, 6)."""
    targets = np.asarray(targets, dtype=float)
    if m.tau_relax == 0:
        return targets.copy()
    decay = np.exp(-dt / m.tau_relax)
    out = np.empty_like(targets)
    state = np.zeros(6) if initial is None else np.asarray(initial, dtype=float)
    for i, tgt in enumerate(targets):
        state = tgt + (state - tgt) * decay
        out[i] = state
    return out
