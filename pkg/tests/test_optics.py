import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ledft.errors import DegeneratePoseError, InvalidConfigError, InvalidRangeError
from ledft.geometry import Displacement6, build_layout, led_world_pose, rotation_permutation, rotation_z
from ledft.optics import (
    AIR,
    PDMS,
    MediumModel,
    NoiseModel,
    adc_quantize,
    frame_signals,
    fwhm,
    irradiance_frames,
    pair_irradiance,
    sweep_pair,
    synthesize_signals,
)

UP = (0.0, 0.0, 1.0)
DOWN = (0.0, 0.0, -1.0)


@pytest.fixture(scope="module")
def layout():
    return build_layout()


def coaxial(g):
    return ((0.0, 0.0, 0.0), UP), ((0.0, 0.0, g), DOWN)


def test_medium_defaults_ordering():
    assert PDMS.cone_exponent < AIR.cone_exponent
    assert PDMS.attenuation > AIR.attenuation == 0
    # 10 degree half-power half-angle in air
    assert math.cos(math.radians(10)) ** AIR.cone_exponent == pytest.approx(0.5, rel=1e-12)
    assert AIR.cone_exponent == pytest.approx(45.28, abs=0.01)


def test_coaxial_air_is_inverse_square():
    e, r = coaxial(6.0)
    assert pair_irradiance(e, r, AIR) == pytest.approx(AIR.intensity_scale / 36.0, rel=1e-15)


def test_receiver_at_ninety_degrees_gets_nothing():
    e = ((0.0, 0.0, 0.0), UP)
    r = ((5.0, 0.0, 0.0), (-1.0, 0.0, 0.0))
    assert pair_irradiance(e, r, AIR) == 0.0


def test_pdms_vs_air_coaxial():
    g = 6.0
    e, r = coaxial(g)
    pdms = MediumModel("pdms", cone_exponent=18.0, attenuation=0.02, intensity_scale=1.2e5)
    expected = pair_irradiance(e, r, AIR) * math.exp(-0.02 * g) * (1.2e5 / AIR.intensity_scale)
    assert pair_irradiance(e, r, pdms) == pytest.approx(expected, rel=1e-14)


def test_off_axis_matches_formula():
    # hand evaluation of the generalized Lambertian law for a tilted pair
    pe, ae = np.zeros(3), np.array([0.0, 0.0, 1.0])
    pr = np.array([1.0, 0.5, 5.0])
    ar = np.array([0.1, 0.0, -1.0]) / math.hypot(0.1, 1.0)
    v = pr - pe
    r = float(np.linalg.norm(v))
    cos_e = float(ae @ v) / r
    cos_r = float(-ar @ v) / r
    m = PDMS
    expected = m.intensity_scale * cos_e**m.cone_exponent * cos_r**m.acceptance_exponent * math.exp(-m.attenuation * r) / r**2
    assert pair_irradiance((pe, ae), (pr, ar), m) == pytest.approx(expected, rel=1e-13)


def test_degenerate_pose():
    e = ((1.0, 1.0, 1.0), UP)
    with pytest.raises(DegeneratePoseError):
        pair_irradiance(e, ((1.0, 1.0, 1.0 + 1e-7), DOWN), AIR)


def test_irradiance_strictly_decreasing_coaxial():
    vals = [pair_irradiance(*coaxial(g), PDMS) for g in np.linspace(0.5, 20, 60)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@settings(max_examples=100, deadline=None)
@given(
    st.tuples(*[st.floats(-10, 10) for _ in range(3)]),
    st.tuples(*[st.floats(-1, 1) for _ in range(3)]),
    st.tuples(*[st.floats(-1, 1) for _ in range(3)]),
)
def test_irradiance_nonnegative(pr, ae, ar):
    ae, ar = np.array(ae), np.array(ar)
    if np.linalg.norm(ae) < 1e-3 or np.linalg.norm(ar) < 1e-3 or np.linalg.norm(pr) < 1e-3:
        return
    val = pair_irradiance((np.zeros(3), ae / np.linalg.norm(ae)), (np.array(pr), ar / np.linalg.norm(ar)), PDMS)
    assert val >= 0


def test_noise_model_validation():
    assert NoiseModel().full_scale == 4095
    with pytest.raises(InvalidConfigError):
        NoiseModel(noisy_channels={1, 2, 3})
    with pytest.raises(InvalidConfigError):
        NoiseModel(base_std=5.0, noisy_std=4.0)
    ch = NoiseModel().channel_std
    assert sorted(np.nonzero(ch == 10.0)[0]) == [3, 9, 14, 20]


@pytest.mark.parametrize(
    "value,expected",
    [(-3.2, 0), (4095 + 10, 4095), (2.5, 2), (3.5, 4), (1000.49, 1000), (1000.51, 1001)],
)
def test_adc_quantize(value, expected):
    assert adc_quantize(value, NoiseModel()) == expected


@settings(max_examples=200, deadline=None)
@given(st.floats(-100, 5000), st.floats(-100, 5000))
def test_adc_quantize_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    n = NoiseModel()
    assert adc_quantize(lo, n) <= adc_quantize(hi, n)


def _oracle_frame(layout, disp, medium):
    """Per-receiver sum of scalar pair irradiances over the opposite board."""
    out = []
    for rec in layout.leds[:24]:
        rp = led_world_pose(layout, disp, rec.id)
        total = 0.0
        for em in layout.leds[24:]:
            if em.board != rec.board:
                total += pair_irradiance(led_world_pose(layout, disp, em.id), rp, medium)
        out.append(total)
    return np.array(out)


@pytest.mark.parametrize("seed", range(5))
def test_vectorised_frame_matches_scalar_oracle(layout, seed):
    rng = np.random.default_rng(seed)
    v = np.concatenate([rng.uniform(-0.5, 0.5, 3), rng.uniform(-0.05, 0.05, 3)])
    d = Displacement6.from_vector(v)
    assert np.allclose(irradiance_frames(layout, v, PDMS), _oracle_frame(layout, d, PDMS), rtol=1e-12, atol=1e-9)


def test_cross_cluster_bleed_is_included(layout):
    # wide cone: far emitters contribute measurably
    wide = MediumModel("pdms", cone_exponent=2.0, acceptance_exponent=1.0, attenuation=0.02)
    disp = Displacement6()
    rec = led_world_pose(layout, disp, 0)
    own = [e for e, rids in layout.pairing.items() if 0 in rids][0]
    own_only = pair_irradiance(led_world_pose(layout, disp, own), rec, wide)
    assert irradiance_frames(layout, np.zeros(6), wide)[0] > own_only * 1.01


def test_zero_noise_frame_is_deterministic(layout):
    quiet = NoiseModel.noiseless()
    a = frame_signals(layout, Displacement6(), PDMS, quiet, None, 0.0)
    b = frame_signals(layout, Displacement6(), PDMS, quiet, None, 0.0)
    assert np.array_equal(a.signals, b.signals)
    assert a.signals.dtype == np.int64 and a.signals.shape == (24,)


def test_seeded_noisy_frame_reproducible(layout):
    a = frame_signals(layout, Displacement6(), PDMS, NoiseModel(), np.random.default_rng(7), 0.0)
    b = frame_signals(layout, Displacement6(), PDMS, NoiseModel(), np.random.default_rng(7), 0.0)
    assert a.signals.tobytes() == b.signals.tobytes()


def test_batched_noise_consumes_stream_like_single_frames(layout):
    disps = np.random.default_rng(0).uniform(-0.2, 0.2, (20, 6)) * [1, 1, 1, 0.1, 0.1, 0.1]
    batch = synthesize_signals(layout, disps, PDMS, NoiseModel(), np.random.default_rng(3))
    rng = np.random.default_rng(3)
    single = np.array(
        [frame_signals(layout, Displacement6.from_vector(d), PDMS, NoiseModel(), rng, 0.0).signals for d in disps]
    )
    assert np.array_equal(batch, single)


def test_signals_within_adc_range(layout):
    disps = np.random.default_rng(1).uniform(-2, 2, (200, 6)) * [1, 1, 1, 0.05, 0.05, 0.05]
    sig = synthesize_signals(layout, disps, PDMS, NoiseModel(), np.random.default_rng(0))
    assert sig.min() >= 0 and sig.max() <= 4095


def test_tenth_mm_displacement_resolvable(layout):
    quiet = NoiseModel.noiseless()
    base = frame_signals(layout, Displacement6(), PDMS, quiet, None, 0.0).signals
    moved = frame_signals(layout, Displacement6((0.1, 0.0, 0.0)), PDMS, quiet, None, 0.0).signals
    assert np.max(np.abs(moved - base)) > 5 * NoiseModel().base_std


def test_frame_continuity(layout):
    rng = np.random.default_rng(2)
    for _ in range(5):
        v = np.concatenate([rng.uniform(-0.4, 0.4, 3), rng.uniform(-0.03, 0.03, 3)])
        base = irradiance_frames(layout, v, PDMS)
        for k in range(6):
            step = np.zeros(6)
            step[k] = 1e-4 if k < 3 else 1e-6
            diff = np.abs(irradiance_frames(layout, v + step, PDMS) - base)
            # local Lipschitz bound: a 1e-4 mm nudge moves no channel by a full count
            assert diff.max() < 1.0


@settings(max_examples=30, deadline=None)
@given(st.tuples(*[st.floats(-0.4, 0.4) for _ in range(3)], *[st.floats(-0.03, 0.03) for _ in range(3)]))
def test_signals_permute_under_120_degree_rotation(v):
    layout = build_layout()
    Q = rotation_z(2 * np.pi / 3)
    v = np.array(v)
    rv = np.concatenate([Q @ v[:3], Q @ v[3:]])
    quiet = NoiseModel.noiseless()
    s = synthesize_signals(layout, v, PDMS, quiet, None)[0]
    rs = synthesize_signals(layout, rv, PDMS, quiet, None)[0]
    perm = rotation_permutation(layout)[:24]
    assert np.max(np.abs(rs[perm] - s)) <= 1


def test_horizontal_sweep_symmetric():
    for medium in (AIR, PDMS):
        prof = sweep_pair(medium, "horizontal", (-3.0, 3.0), 0.1)
        assert np.allclose(prof[:, 0], -prof[::-1, 0], atol=0)
        assert np.max(np.abs(prof[:, 1] - prof[::-1, 1])) <= 1e-12


def test_sweep_supports_tenth_mm_step():
    prof = sweep_pair(PDMS, "horizontal", (0.0, 1.0), 0.1)
    assert prof.shape == (11, 2)
    assert np.allclose(np.diff(prof[:, 0]), 0.1)


def test_pdms_profile_wider_than_air():
    w_air = fwhm(sweep_pair(AIR, "horizontal", (-5, 5), 0.1))
    w_pdms = fwhm(sweep_pair(PDMS, "horizontal", (-5, 5), 0.1))
    assert w_pdms > w_air


def test_vertical_sweep_inverse_square_in_air():
    # separations g = 4 and 2g = 8 around a 6 mm nominal gap
    prof = sweep_pair(AIR, "vertical", (-2.0, 2.0), 0.5, gap=6.0)
    at = dict(zip(np.round(prof[:, 0], 9), prof[:, 1]))
    assert at[-2.0] / at[2.0] == pytest.approx(4.0, rel=1e-12)


def test_fwhm_of_triangle():
    x = np.linspace(-2, 2, 41)
    y = np.maximum(0, 1 - np.abs(x))
    assert fwhm(np.column_stack([x, y])) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "args",
    [("horizontal", (1.0, 1.0), 0.1), ("horizontal", (1.0, 0.0), 0.1), ("horizontal", (0, 1), 0.0),
     ("diagonal", (0, 1), 0.1), ("vertical", (-7.0, 0.0), 0.1)],
)
def test_sweep_invalid_range(args):
    with pytest.raises(InvalidRangeError):
        sweep_pair(AIR, *args)
