"""Two-plate LED layout and rigid-body placement of the LEDs.

Both boards use world-aligned frames: a board-frame position is ``(x, y, 0)``
and board-frame axes are already expressed in world orientation.  The bottom
board is fixed at ``z = 0``; the top board sits at ``z = plate_gap`` and moves
with the inter-plate displacement.  Bottom LEDs look up (+z), top LEDs look
down (-z).

Channel numbering: receivers are ``0..23`` (the signal columns), emitters
follow at ``24..29``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidConfigError, UnknownIdError

__all__ = [
    "LedSpec",
    "LayoutConfig",
    "SensorLayout",
    "Displacement6",
    "build_layout",
    "led_world_pose",
    "world_poses",
    "small_rotation",
    "rotation_z",
    "rotation_permutation",
]

N_CLUSTERS_PER_BOARD = 3
RECEIVERS_PER_CLUSTER = 4
N_RECEIVERS = 2 * N_CLUSTERS_PER_BOARD * RECEIVERS_PER_CLUSTER
N_EMITTERS = 2 * N_CLUSTERS_PER_BOARD
MAX_ROTATION = 0.2  # rad


@dataclass(frozen=True)
class LedSpec:
    id: int
    board: str  # "top" | "bottom"
    role: str  # "emitter" | "receiver"
    position: Tuple[float, float, float]
    axis: Tuple[float, float, float]
    cluster: int


@dataclass(frozen=True)
class LayoutConfig:
    """Geometric parameters of the two LED boards (all lengths in mm).

    ``cluster_offset`` is the radial distance of emitters and cluster centres
    from the plate axis; ``None`` means ``emitter_radius_fraction * board_radius``.
    """

    plate_gap: float = 6.0
    board_radius: float = 12.7
    cluster_offset: Optional[float] = None
    emitter_radius_fraction: float = 0.6
    cluster_pitch: float = 2.5

    def resolved_offset(self) -> float:
        if self.cluster_offset is not None:
            return float(self.cluster_offset)
        return self.emitter_radius_fraction * self.board_radius


@dataclass(frozen=True, eq=False)
class SensorLayout:
    plate_gap: float
    board_radius: float
    leds: Tuple[LedSpec, ...]
    pairing: Dict[int, Tuple[int, int, int, int]]
    # dense views used by the vectorised optics
    positions: np.ndarray = field(repr=False)
    axes: np.ndarray = field(repr=False)
    is_top: np.ndarray = field(repr=False)

    @property
    def receiver_ids(self) -> np.ndarray:
        return np.array([l.id for l in self.leds if l.role == "receiver"])

    @property
    def emitter_ids(self) -> np.ndarray:
        return np.array([l.id for l in self.leds if l.role == "emitter"])

    def led(self, led_id: int) -> LedSpec:
        if not 0 <= led_id < len(self.leds):
            raise UnknownIdError(f"no LED with id {led_id}")
        return self.leds[led_id]


@dataclass(frozen=True)
class Displacement6:
    """Pose of the top plate relative to its rest pose (mm, rad axis-angle)."""

    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float)
        r = np.asarray(self.rotation, dtype=float)
        if t.shape != (3,) or r.shape != (3,):
            raise ValueError("translation and rotation must be 3-vectors")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(r))):
            raise ValueError("displacement must be finite")
        if np.linalg.norm(r) >= MAX_ROTATION:
            raise ValueError(f"rotation magnitude {np.linalg.norm(r):.3g} rad outside small-angle regime")
        object.__setattr__(self, "translation", tuple(float(v) for v in t))
        object.__setattr__(self, "rotation", tuple(float(v) for v in r))

    def as_vector(self) -> np.ndarray:
        return np.array(self.translation + self.rotation)

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "Displacement6":
        v = np.asarray(v, dtype=float)
        return cls(tuple(v[:3]), tuple(v[3:6]))


def rotation_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _skew(r: np.ndarray) -> np.ndarray:
    """Batched cross-product matrices, ``r`` of shape (..., 3)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape[:-1] + (3, 3))
    out[..., 0, 1] = -r[..., 2]
    out[..., 0, 2] = r[..., 1]
    out[..., 1, 0] = r[..., 2]
    out[..., 1, 2] = -r[..., 0]
    out[..., 2, 0] = -r[..., 1]
    out[..., 2, 1] = r[..., 0]
    return out


def small_rotation(r) -> np.ndarray:
    """First-order rotation matrix ``I + skew(r)`` (batched over leading dims)."""
    return np.eye(3) + _skew(r)


def build_layout(config: Optional[LayoutConfig] = None) -> SensorLayout:
    """Place 3 emitters and 3 four-receiver clusters on each board.

    Bottom emitters sit at 0/120/240 degrees and face the top clusters
    directly above them; top emitters sit at 60/180/300 degrees facing the
    bottom clusters.  Each cluster is a square of side ``cluster_pitch``
    centred on the axis of the emitter facing it.
    """
    cfg = config or LayoutConfig()
    offset = cfg.resolved_offset()
    if not cfg.plate_gap > 0:
        raise InvalidConfigError(f"plate_gap must be > 0, got {cfg.plate_gap}")
    if not cfg.board_radius > 0:
        raise InvalidConfigError(f"board_radius must be > 0, got {cfg.board_radius}")
    if cfg.board_radius > 13.5:
        raise InvalidConfigError("board_radius exceeds the 13.5 mm housing radius")
    if not cfg.cluster_pitch > 0:
        raise InvalidConfigError("cluster_pitch must be > 0")
    half = cfg.cluster_pitch / 2.0
    if not (0 < offset and np.hypot(offset + half, half) <= cfg.board_radius):
        raise InvalidConfigError(
            f"clusters at radial offset {offset:.3g} mm do not fit on a {cfg.board_radius} mm board"
        )

    up, down = (0.0, 0.0, 1.0), (0.0, 0.0, -1.0)
    # corners in (radial, tangential) coordinates
    corners = [(-half, -half), (half, -half), (half, half), (-half, half)]
    leds = []
    pairing = {}
    cluster_angles = {}
    for c in range(2 * N_CLUSTERS_PER_BOARD):
        board = "bottom" if c < N_CLUSTERS_PER_BOARD else "top"
        k = c % N_CLUSTERS_PER_BOARD
        phase = np.pi / 3 if board == "bottom" else 0.0
        cluster_angles[c] = phase + k * 2 * np.pi / 3
    for c in range(2 * N_CLUSTERS_PER_BOARD):
        board = "bottom" if c < N_CLUSTERS_PER_BOARD else "top"
        ang = cluster_angles[c]
        radial = np.array([np.cos(ang), np.sin(ang)])
        tangential = np.array([-np.sin(ang), np.cos(ang)])
        for j, (dr, dt) in enumerate(corners):
            xy = (offset + dr) * radial + dt * tangential
            leds.append(
                LedSpec(
                    id=c * RECEIVERS_PER_CLUSTER + j,
                    board=board,
                    role="receiver",
                    position=(float(xy[0]), float(xy[1]), 0.0),
                    axis=up if board == "bottom" else down,
                    cluster=c,
                )
            )
    # emitters: ids 24..26 on top (facing bottom clusters 0..2), 27..29 on bottom
    for c in range(2 * N_CLUSTERS_PER_BOARD):
        facing_board = "bottom" if c < N_CLUSTERS_PER_BOARD else "top"
        board = "top" if facing_board == "bottom" else "bottom"
        ang = cluster_angles[c]
        eid = N_RECEIVERS + c
        leds.append(
            LedSpec(
                id=eid,
                board=board,
                role="emitter",
                position=(float(offset * np.cos(ang)), float(offset * np.sin(ang)), 0.0),
                axis=up if board == "bottom" else down,
                cluster=c,
            )
        )
        pairing[eid] = tuple(c * RECEIVERS_PER_CLUSTER + j for j in range(RECEIVERS_PER_CLUSTER))

    positions = np.array([l.position for l in leds])
    axes = np.array([l.axis for l in leds])
    is_top = np.array([l.board == "top" for l in leds])
    for arr in (positions, axes, is_top):
        arr.setflags(write=False)
    return SensorLayout(
        plate_gap=float(cfg.plate_gap),
        board_radius=float(cfg.board_radius),
        leds=tuple(leds),
        pairing=pairing,
        positions=positions,
        axes=axes,
        is_top=is_top,
    )


def world_poses(layout: SensorLayout, disp) -> Tuple[np.ndarray, np.ndarray]:
    """World positions and unit axes of every LED for one or many displacements.

    ``disp`` is a :class:`Displacement6` or an array of shape (..., 6) holding
    ``(tx, ty, tz, rx, ry, rz)``.  Returns arrays of shape (..., n_leds, 3).
    """
    if isinstance(disp, Displacement6):
        disp = disp.as_vector()
    d = np.asarray(disp, dtype=float)
    lead = d.shape[:-1]
    R = small_rotation(d[..., 3:6])  # (..., 3, 3)
    shift = d[..., None, 0:3] + np.array([0.0, 0.0, layout.plate_gap])

    n = len(layout.leds)
    pos = np.broadcast_to(layout.positions, lead + (n, 3)).copy()
    ax = np.broadcast_to(layout.axes, lead + (n, 3)).copy()
    top = layout.is_top
    pos[..., top, :] = np.einsum("...ij,nj->...ni", R, layout.positions[top]) + shift
    rot_ax = np.einsum("...ij,nj->...ni", R, layout.axes[top])
    ax[..., top, :] = rot_ax / np.linalg.norm(rot_ax, axis=-1, keepdims=True)
    return pos, ax


def led_world_pose(layout: SensorLayout, disp: Displacement6, led_id: int) -> Tuple[np.ndarray, np.ndarray]:
    spec = layout.led(led_id)
    p = np.array(spec.position)
    a = np.array(spec.axis)
    if spec.board == "bottom":
        return p, a
    R = small_rotation(np.asarray(disp.rotation))
    p = R @ p + np.asarray(disp.translation) + np.array([0.0, 0.0, layout.plate_gap])
    a = R @ a
    return p, a / np.linalg.norm(a)


def rotation_permutation(layout: SensorLayout, k: int = 1, atol: float = 1e-9) -> np.ndarray:
    """Id permutation induced by rotating the layout ``k * 120`` degrees about z.

    ``perm[i]`` is the id of the LED that LED ``i`` lands on.  Raises
    ``ValueError`` when the layout is not symmetric.
    """
    Q = rotation_z(k * 2 * np.pi / 3)
    rotated = layout.positions @ Q.T
    rotated_axes = layout.axes @ Q.T
    perm = np.empty(len(layout.leds), dtype=int)
    for i, led in enumerate(layout.leds):
        match = [
            j
            for j, other in enumerate(layout.leds)
            if other.board == led.board
            and other.role == led.role
            and np.allclose(layout.positions[j], rotated[i], atol=atol, rtol=0)
            and np.allclose(layout.axes[j], rotated_axes[i], atol=atol, rtol=0)
        ]
        if len(match) != 1:
            raise ValueError(f"layout is not 120-degree symmetric at LED {i}")
        perm[i] = match[0]
    return perm
