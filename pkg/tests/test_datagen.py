import dataclasses

import numpy as np
import pytest

from ledft.datagen import (
    CSV_HEADER,
    GROUPS,
    ProtocolConfig,
    ScheduledFile,
    Twin,
    file_seed,
    generate_dataset,
    generate_schedule,
    read_datafile,
    synthesize_file,
    write_datafile,
)
from ledft.errors import DataFormatError, InfeasibleScheduleError, InvalidConfigError
from ledft.geometry import build_layout
from ledft.mechanics import default_compliance, displacements_from_wrenches, relax_series, wrench_from_contact
from ledft.optics import PDMS, NoiseModel, irradiance_frames


@pytest.fixture(scope="module")
def train_sched():
    return generate_schedule(ProtocolConfig(), np.random.default_rng([0, 0]), split="train")


@pytest.fixture(scope="module")
def test_sched():
    return generate_schedule(ProtocolConfig(), np.random.default_rng([0, 1]), split="test")


@pytest.fixture(scope="module")
def one_file(train_sched):
    return synthesize_file(train_sched[0], Twin(), np.random.default_rng(5))


def contacts(sched):
    return [c for f in sched for c in f.contacts]


def test_train_schedule_size(train_sched):
    assert len(train_sched) == 50
    assert len(contacts(train_sched)) == 150
    assert all(len(f.contacts) == 3 for f in train_sched)


def test_test_schedule_size(test_sched):
    assert len(test_sched) == 10
    cs = contacts(test_sched)
    assert len(cs) == 30
    for loc in range(10):
        groups = sorted(c.group for f in test_sched if f.location == loc for c in f.contacts)
        assert groups == sorted(GROUPS)


def test_locations_evenly_spaced(train_sched):
    az = sorted({c.azimuth for c in contacts(train_sched)})
    assert np.allclose(az, 2 * np.pi * np.arange(10) / 10)


def test_group_coverage_and_high_fraction(train_sched):
    for loc in range(10):
        groups = [c.group for f in train_sched if f.location == loc for c in f.contacts]
        assert len(groups) == 15
        for g in GROUPS:
            assert groups.count(g) >= 3
    high = [c for c in contacts(train_sched) if c.group == "high"]
    assert len(high) == round(0.05 * 150)
    assert all(2.0 <= c.peak_force <= 10.0 for c in high)


def test_force_ranges(train_sched):
    p = ProtocolConfig()
    for c in contacts(train_sched):
        if c.group != "high":
            lo, hi = p.force_groups[c.group]
            assert lo <= c.peak_force <= hi


def test_contacts_disjoint_with_gaps(train_sched, test_sched):
    for f in train_sched + test_sched:
        cs = sorted(f.contacts, key=lambda c: c.t_start)
        assert cs[0].t_start >= 1.0 - 1e-12
        assert cs[-1].t_end <= 20.0 - 1.0 + 1e-9
        for a, b in zip(cs, cs[1:]):
            assert b.t_start - a.t_end >= 1.0 - 1e-9
        assert all(2.0 <= c.hold <= 5.0 for c in cs)


def test_worst_case_feasible():
    # 3 contacts of 5 s with 1 s gaps around each: 3*5 + 4 < 20
    p = ProtocolConfig(hold_range=(5.0, 5.0))
    sched = generate_schedule(p, np.random.default_rng(0))
    assert all(c.hold == 5.0 for c in contacts(sched))


def test_infeasible_schedule():
    p = ProtocolConfig(file_duration=15.0)
    with pytest.raises(InfeasibleScheduleError):
        generate_schedule(p, np.random.default_rng(0))


def test_file_shape_and_timing(one_file):
    assert len(one_file) == 10000
    assert one_file.signals.shape == (10000, 24) and one_file.signals.dtype == np.int64
    assert np.allclose(np.diff(one_file.t), 0.002, rtol=0, atol=1e-12)
    assert np.all(np.diff(one_file.t) > 0)


def test_first_frames_contact_free(one_file):
    assert np.all(one_file.wrenches[:50] == 0)


def test_label_fidelity(train_sched, one_file):
    entry = train_sched[0]
    for i in (0, 777, 1500, 2600, 4100, 7300, 9999):
        expect = sum(wrench_from_contact(c, one_file.t[i]).as_vector() for c in entry.contacts)
        assert np.array_equal(one_file.wrenches[i], expect)


def test_noise_free_signals_follow_mechanics(train_sched):
    twin = Twin(noise=NoiseModel.noiseless())
    df = synthesize_file(train_sched[3], twin, np.random.default_rng(0))
    layout = build_layout()
    disps = displacements_from_wrenches(default_compliance(), df.wrenches)
    expect = np.rint(np.clip(irradiance_frames(layout, disps, twin.medium), 0, 4095))
    assert np.array_equal(df.signals, expect.astype(np.int64))


def test_relaxation_lags_signals_not_labels(train_sched):
    quiet = NoiseModel.noiseless()
    slow = default_compliance(tau_relax=0.15)
    elastic = synthesize_file(train_sched[3], Twin(noise=quiet), None)
    lagged = synthesize_file(train_sched[3], Twin(noise=quiet, compliance=slow), None)
    assert np.array_equal(lagged.wrenches, elastic.wrenches)
    assert not np.array_equal(lagged.signals, elastic.signals)
    disps = relax_series(slow, displacements_from_wrenches(slow, lagged.wrenches), 0.002)
    expect = np.rint(np.clip(irradiance_frames(build_layout(), disps, PDMS), 0, 4095))
    assert np.array_equal(lagged.signals, expect.astype(np.int64))


def test_zero_contact_file_is_baseline():
    twin = Twin(noise=NoiseModel.noiseless())
    df = synthesize_file(ScheduledFile("empty", "train", 0, ()), twin, None)
    assert len(df) == 10000
    assert np.all(df.signals == df.signals[0])
    assert np.all(df.wrenches == 0)


def test_synthesis_deterministic(train_sched, one_file):
    again = synthesize_file(train_sched[0], Twin(), np.random.default_rng(5))
    assert again.signals.tobytes() == one_file.signals.tobytes()
    assert again.wrenches.tobytes() == one_file.wrenches.tobytes()


def test_file_seed_independent_and_stable():
    assert file_seed(0, "train", 3) == file_seed(0, "train", 3)
    seeds = {file_seed(0, s, i) for s in ("train", "test") for i in range(50)}
    assert len(seeds) == 100
    assert file_seed(1, "train", 0) != file_seed(0, "train", 0)


def test_train_test_share_no_contact(train_sched, test_sched):
    key = lambda c: (c.azimuth, c.height, c.peak_force, c.t_start)
    assert not ({key(c) for c in contacts(train_sched)} & {key(c) for c in contacts(test_sched)})


def test_small_dataset_deterministic():
    p = ProtocolConfig(n_locations=2, file_duration=20.0)
    a_train, a_test = generate_dataset(p, Twin(), 11)
    b_train, b_test = generate_dataset(p, Twin(), 11)
    assert len(a_train) == 10 and len(a_test) == 2
    for x, y in zip(a_train + a_test, b_train + b_test):
        assert x.signals.tobytes() == y.signals.tobytes()
        assert x.metadata == y.metadata


def test_csv_round_trip(tmp_path, one_file):
    path = write_datafile(tmp_path / "f.csv", one_file)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    back = read_datafile(path)
    assert np.array_equal(back.t, one_file.t)
    assert np.array_equal(back.signals, one_file.signals)
    assert np.array_equal(back.wrenches, one_file.wrenches)
    assert back.metadata == one_file.metadata


def _small_file():
    entry = ScheduledFile("tiny", "train", 0, ())
    df = synthesize_file(entry, Twin(), np.random.default_rng(0), ProtocolConfig(file_duration=1.0))
    return df


@pytest.mark.parametrize(
    "mutate,needle",
    [
        (lambda rows: rows.__setitem__(5, rows[5].rsplit(",", 1)[0]), "row 6"),
        (lambda rows: rows.__setitem__(9, "x" + rows[9][rows[9].index(",") :]), "row 10"),
        (lambda rows: rows.__setitem__(0, "time," + rows[0]), "header"),
    ],
)
def test_corrupt_csv_reports_row(tmp_path, mutate, needle):
    path = write_datafile(tmp_path / "bad.csv", _small_file())
    rows = path.read_text().splitlines()
    mutate(rows)
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataFormatError, match=needle):
        read_datafile(path)


def test_non_integer_signal_rejected(tmp_path):
    path = write_datafile(tmp_path / "bad.csv", _small_file())
    rows = path.read_text().splitlines()
    fields = rows[3].split(",")
    fields[1] = fields[1] + ".5"
    rows[3] = ",".join(fields)
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataFormatError, match="row 4"):
        read_datafile(path)


def test_protocol_validation():
    with pytest.raises(InvalidConfigError):
        dataclasses.replace(ProtocolConfig(), sample_rate=0.0)
