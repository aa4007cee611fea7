"""Synthetic labelled datasets following the finger-push collection protocol.

Ten equally spaced contact locations around the finger; per location, files
of three contacts each at the top, middle and bottom of the finger.  Training
contacts cover each force group three times followed by six extra contacts in
random groups; the test split has one contact per group per location.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataFormatError, InfeasibleScheduleError, InvalidConfigError
from .geometry import N_RECEIVERS, LayoutConfig, SensorLayout, build_layout
from .mechanics import (
    ComplianceModel,
    ContactEvent,
    FingerConfig,
    default_compliance,
    displacements_from_wrenches,
    relax_series,
    wrench_series,
)
from .optics import PDMS, MediumModel, NoiseModel, synthesize_signals

__all__ = [
    "ProtocolConfig",
    "Twin",
    "ScheduledFile",
    "DataFile",
    "generate_schedule",
    "synthesize_file",
    "generate_dataset",
    "file_seed",
    "write_datafile",
    "read_datafile",
    "CSV_HEADER",
]

GROUPS = ("below_1N", "around_1N", "around_2N")
HEIGHT_LABELS = ("top", "middle", "bottom")
SIGNAL_COLUMNS = [f"s{i:02d}" for i in range(N_RECEIVERS)]
LABEL_COLUMNS = ["fx", "fy", "fz", "tx", "ty", "tz"]
CSV_HEADER = ["t"] + SIGNAL_COLUMNS + LABEL_COLUMNS


@dataclass(frozen=True)
class ProtocolConfig:
    n_locations: int = 10
    contacts_per_location: int = 15
    group_quota: int = 3
    force_groups: Dict[str, Tuple[float, float]] = field(
        default_factory=lambda: {
            "below_1N": (0.2, 0.8),
            "around_1N": (0.8, 1.2),
            "around_2N": (1.6, 2.4),
        }
    )
    high_force_range: Tuple[float, float] = (2.0, 10.0)
    high_force_fraction: float = 0.05
    file_duration: float = 20.0  # s
    contacts_per_file: int = 3
    sample_rate: float = 500.0  # Hz
    hold_range: Tuple[float, float] = (2.0, 5.0)  # s, whole contact duration
    ramp: float = 0.3  # s
    min_gap: float = 1.0  # s, also the initial and final quiet time
    baseline_frames: int = 50
    test_contacts_per_location_per_group: int = 1

    def __post_init__(self):
        groups = dict(self.force_groups)
        if set(groups) != set(GROUPS):
            raise InvalidConfigError(f"force_groups must define exactly {GROUPS}")
        # canonical order, whatever order the source (e.g. sorted JSON) used
        object.__setattr__(self, "force_groups", {g: tuple(groups[g]) for g in GROUPS})
        object.__setattr__(self, "high_force_range", tuple(self.high_force_range))
        object.__setattr__(self, "hold_range", tuple(self.hold_range))
        if self.group_quota * len(GROUPS) > self.contacts_per_location:
            raise InvalidConfigError("group quotas exceed contacts_per_location")
        if self.contacts_per_location % self.contacts_per_file:
            raise InvalidConfigError("contacts_per_location must be a multiple of contacts_per_file")
        if (len(GROUPS) * self.test_contacts_per_location_per_group) % self.contacts_per_file:
            raise InvalidConfigError("test contacts per location must fill whole files")
        if self.n_locations < 1 or self.contacts_per_file < 1 or self.sample_rate <= 0:
            raise InvalidConfigError("counts and sample_rate must be positive")
        if not 0 <= self.high_force_fraction <= 1:
            raise InvalidConfigError("high_force_fraction must be in [0, 1]")
        lo, hi = self.hold_range
        if not (2.0 <= lo <= hi <= 5.0):
            raise InvalidConfigError("hold_range must lie within [2, 5] s")
        if not 0 <= 2 * self.ramp < lo:
            raise InvalidConfigError("ramps must fit inside the shortest contact")
        if self.min_gap * self.sample_rate < self.baseline_frames:
            raise InvalidConfigError("initial quiet time shorter than the baseline window")

    @property
    def frames_per_file(self) -> int:
        return int(round(self.file_duration * self.sample_rate))


@dataclass(frozen=True)
class Twin:
    """Physical parameterization of the simulated sensor."""

    layout: LayoutConfig = field(default_factory=LayoutConfig)
    medium: MediumModel = PDMS
    noise: NoiseModel = field(default_factory=NoiseModel)
    compliance: ComplianceModel = field(default_factory=default_compliance)
    finger: FingerConfig = field(default_factory=FingerConfig)


@dataclass(frozen=True)
class ScheduledFile:
    file_id: str
    split: str
    location: int
    contacts: Tuple[ContactEvent, ...]


@dataclass(eq=False)
class DataFile:
    """One recording: frame times, raw 24-channel counts and wrench labels."""

    file_id: str
    t: np.ndarray  # (n,)
    signals: np.ndarray  # (n, 24) int64
    wrenches: np.ndarray  # (n, 6) N, N*mm
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.size


def _place_contacts(p: ProtocolConfig, holds: Sequence[float], rng: np.random.Generator) -> List[float]:
    n = len(holds)
    slack = p.file_duration - sum(holds) - (n + 1) * p.min_gap
    if slack < 0:
        raise InfeasibleScheduleError(
            f"{n} contacts totalling {sum(holds):.2f} s do not fit in {p.file_duration} s with {p.min_gap} s gaps"
        )
    cuts = np.sort(rng.uniform(0.0, slack, n))
    starts, t = [], p.min_gap
    prev = 0.0
    for hold, cut in zip(holds, cuts):
        t += cut - prev
        prev = cut
        starts.append(t)
        t += hold + p.min_gap
    return starts


def _make_file(
    p: ProtocolConfig,
    finger: FingerConfig,
    rng: np.random.Generator,
    file_id: str,
    split: str,
    location: int,
    groups: Sequence[str],
    heights: Sequence[int],
) -> ScheduledFile:
    azimuth = 2 * np.pi * location / p.n_locations
    holds = [float(rng.uniform(*p.hold_range)) for _ in groups]
    starts = _place_contacts(p, holds, rng)
    contacts = []
    for group, h, hold, start in zip(groups, heights, holds, starts):
        lo, hi = p.high_force_range if group == "high" else p.force_groups[group]
        contacts.append(
            ContactEvent(
                azimuth=azimuth,
                height=finger.heights[h],
                peak_force=float(rng.uniform(lo, hi)),
                t_start=start,
                ramp=p.ramp,
                hold=hold,
                finger_radius=finger.radius,
                group=group,
            )
        )
    return ScheduledFile(file_id, split, location, tuple(contacts))


def generate_schedule(
    p: ProtocolConfig,
    rng: np.random.Generator,
    finger: Optional[FingerConfig] = None,
    split: str = "train",
) -> List[ScheduledFile]:
    """Contact schedule for one split, grouped into files.

    Raises :class:`InfeasibleScheduleError` when the longest possible
    contacts cannot fit in a file.
    """
    finger = finger or FingerConfig()
    worst = p.contacts_per_file * p.hold_range[1] + (p.contacts_per_file + 1) * p.min_gap
    if worst > p.file_duration + 1e-12:
        raise InfeasibleScheduleError(f"worst-case file needs {worst:.2f} s, only {p.file_duration} s available")
    per_file = p.contacts_per_file
    files = []
    if split == "train":
        plan = []  # (location, groups, is_extra)
        for loc in range(p.n_locations):
            groups = [g for g in GROUPS for _ in range(p.group_quota)]
            extra = p.contacts_per_location - len(groups)
            groups += [GROUPS[i] for i in rng.integers(0, len(GROUPS), extra)]
            is_extra = [False] * (len(groups) - extra) + [True] * extra
            plan.append((loc, groups, is_extra))
        # redraw a fraction of the extra contacts in the high-force range
        extra_slots = [(i, j) for i, (_, _, ex) in enumerate(plan) for j, e in enumerate(ex) if e]
        n_high = min(len(extra_slots), int(round(p.high_force_fraction * p.n_locations * p.contacts_per_location)))
        if n_high:
            for k in rng.choice(len(extra_slots), n_high, replace=False):
                i, j = extra_slots[k]
                plan[i][1][j] = "high"
        for loc, groups, _ in plan:
            for f in range(len(groups) // per_file):
                chunk = groups[f * per_file : (f + 1) * per_file]
                heights = [k % len(HEIGHT_LABELS) for k in range(per_file)]
                files.append(_make_file(p, finger, rng, f"train_{len(files):03d}", split, loc, chunk, heights))
    elif split == "test":
        for loc in range(p.n_locations):
            groups = [g for g in GROUPS for _ in range(p.test_contacts_per_location_per_group)]
            groups = [groups[i] for i in rng.permutation(len(groups))]
            for f in range(len(groups) // per_file):
                chunk = groups[f * per_file : (f + 1) * per_file]
                heights = [int(h) % len(HEIGHT_LABELS) for h in rng.permutation(per_file)]
                files.append(_make_file(p, finger, rng, f"test_{len(files):03d}", split, loc, chunk, heights))
    else:
        raise ValueError(f"unknown split {split!r}")
    return files


def file_seed(master_seed: int, split: str, index: int) -> int:
    """Per-file seed derived from the master seed, independent of file order."""
    ss = np.random.SeedSequence([int(master_seed), 2, ("train", "test").index(split), int(index)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def synthesize_file(
    entry: ScheduledFile,
    twin: Twin,
    rng: np.random.Generator,
    protocol: Optional[ProtocolConfig] = None,
    layout: Optional[SensorLayout] = None,
) -> DataFile:
    """Simulate one recording at the protocol sample rate.

    Per frame: summed contact wrench, elastic displacement (with relaxation
    when enabled), then the quantized 24-channel frame.  Labels are the exact
    simulated wrenches.
    """
    p = protocol or ProtocolConfig()
    layout = layout or build_layout(twin.layout)
    n = p.frames_per_file
    t = np.arange(n) / p.sample_rate
    quiet_until = p.baseline_frames / p.sample_rate
    if any(c.t_start < quiet_until for c in entry.contacts):
        raise InfeasibleScheduleError(f"{entry.file_id}: contact starts inside the baseline window")
    wrenches = wrench_series(entry.contacts, t)
    disps = displacements_from_wrenches(twin.compliance, wrenches, layout.plate_gap)
    disps = relax_series(twin.compliance, disps, 1.0 / p.sample_rate)
    signals = synthesize_signals(layout, disps, twin.medium, twin.noise, rng)
    meta = {
        "file_id": entry.file_id,
        "split": entry.split,
        "location": entry.location,
        "contacts": [asdict(c) for c in entry.contacts],
    }
    return DataFile(entry.file_id, t, signals, wrenches, meta)


def generate_dataset(
    p: ProtocolConfig, twin: Twin, seed: int
) -> Tuple[List[DataFile], List[DataFile]]:
    """Train and test recordings from a master seed.

    Train and test schedules come from separate streams and never share a
    contact.
    """
    layout = build_layout(twin.layout)
    train_sched = generate_schedule(p, np.random.default_rng([seed, 0]), twin.finger, "train")
    test_sched = generate_schedule(p, np.random.default_rng([seed, 1]), twin.finger, "test")

    def key(c):
        return (c.azimuth, c.height, c.peak_force, c.t_start)

    seen = {key(c) for f in train_sched for c in f.contacts}
    if any(key(c) in seen for f in test_sched for c in f.contacts):
        raise InfeasibleScheduleError("test schedule reuses a training contact")

    out = []
    for split, sched in (("train", train_sched), ("test", test_sched)):
        files = []
        for i, entry in enumerate(sched):
            s = file_seed(seed, split, i)
            df = synthesize_file(entry, twin, np.random.default_rng(s), p, layout)
            df.metadata["seed"] = s
            files.append(df)
        out.append(files)
    return out[0], out[1]


def write_datafile(path, df: DataFile) -> Path:
    """Write ``<path>`` (CSV, one row per frame) and its ``.json`` metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for t, sig, w in zip(df.t.tolist(), df.signals.tolist(), df.wrenches.tolist()):
            fh.write(repr(t) + "," + ",".join(map(str, sig)) + "," + ",".join(map(repr, w)) + "\n")
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(df.metadata, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _locate_bad_row(path: Path) -> str:
    width = len(CSV_HEADER)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                return f"{path}: row {lineno} has {len(row)} fields, expected {width}"
            try:
                [float(v) for v in row]
            except ValueError:
                return f"{path}: row {lineno} has a non-numeric value"
    return f"{path}: unreadable data"


def read_datafile(path) -> DataFile:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if header != CSV_HEADER:
        raise DataFormatError(f"{path}: unexpected header")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError:
        raise DataFormatError(_locate_bad_row(path)) from None
    if data.shape[1] != len(CSV_HEADER):
        raise DataFormatError(_locate_bad_row(path))
    signals = data[:, 1 : 1 + N_RECEIVERS]
    bad = np.nonzero(np.any(signals != np.round(signals), axis=1))[0]
    if bad.size:
        raise DataFormatError(f"{path}: row {bad[0] + 2} has non-integer signal counts")
    t = data[:, 0]
    if t.size > 1 and np.any(np.diff(t) <= 0):
        row = int(np.nonzero(np.diff(t) <= 0)[0][0]) + 3
        raise DataFormatError(f"{path}: row {row} timestamp not increasing")
    meta_path = path.with_suffix(".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return DataFile(
        file_id=meta.get("file_id", path.stem),
        t=t.copy(),
        signals=signals.astype(np.int64),
        wrenches=data[:, 1 + N_RECEIVERS :].copy(),
        metadata=meta,
    )
