import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import band_limited_texture, block_match, gaussian_blob
from tfg.flow import (
    FlowError,
    FlowField,
    FlowParams,
    compute_flow,
    flow_energy,
    flow_series,
    to_polar,
    write_flow_csv,
)
from tfg.imgseq import ImageSequence
from tfg.phantom import PendulumSpec, gen_pendulum


def _median_epe(field, truth, region):
    err = np.hypot(field.vx - truth[0], field.vy - truth[1])
    return float(np.median(err[region]))


def _interior(n, margin=8):
    m = np.zeros((n, n), dtype=bool)
    m[margin:-margin, margin:-margin] = True
    return m


@pytest.mark.parametrize("frame", [
    band_limited_texture(seed=4),
    gaussian_blob(48, 20.3, 25.1),
    np.full((16, 16), 0.5),
])
def test_identical_frames_give_zero_flow(frame):
    f = compute_flow(frame, frame)
    assert f.magnitude().max() < 1e-6


def test_blob_unit_translation_single_level():
    a = gaussian_blob(64, 32, 32)
    b = gaussian_blob(64, 33, 32)
    region = a > 0.2
    ys, xs = np.nonzero(region)
    oracle = block_match(a, b, list(zip(xs[::7], ys[::7])))
    assert np.array_equal(np.median(oracle, axis=0), [1.0, 0.0])
    f = compute_flow(a, b, FlowParams(pyramid_levels=1))
    assert abs(np.median(f.vx[region]) - 1.0) < 0.2
    assert abs(np.median(f.vy[region])) < 0.2


def test_blob_large_translation_needs_pyramid():
    a = gaussian_blob(64, 32, 34)
    b = gaussian_blob(64, 32, 31)
    region = a > 0.2
    ys, xs = np.nonzero(region)
    oracle = block_match(a, b, list(zip(xs[::7], ys[::7])))
    assert np.array_equal(np.median(oracle, axis=0), [0.0, -3.0])
    f = compute_flow(a, b, FlowParams(pyramid_levels=3))
    assert abs(np.median(f.vx[region])) < 0.3
    assert abs(np.median(f.vy[region]) + 3.0) < 0.3


@pytest.mark.parametrize("shift", [(1, 0), (-1, 0), (0, 1), (0, -1), (3, 0), (-3, 0), (0, 3), (0, -3)])
def test_texture_translation_against_block_matching(shift):
    dx, dy = shift
    a = band_limited_texture(seed=11)
    b = np.roll(a, (dy, dx), axis=(0, 1))
    region = _interior(64, 10)
    pts = [(x, y) for y in range(12, 52, 6) for x in range(12, 52, 6)]
    oracle = block_match(a, b, pts)
    truth = np.median(oracle, axis=0)
    assert np.array_equal(truth, [dx, dy])
    f = compute_flow(a, b)
    assert _median_epe(f, truth, region) < 0.3


def test_energy_non_increasing_within_each_level():
    a = band_limited_texture(seed=2)
    b = np.roll(a, (2, -1), axis=(0, 1))
    trace = []
    compute_flow(a, b, trace=trace)
    assert len(trace) == 4
    for lt in trace:
        e = np.asarray(lt.energies)
        assert np.all(np.diff(e) <= 1e-9 * e[0])
        assert e[-1] < e[0]


def test_levels_are_coarse_to_fine():
    a = band_limited_texture(seed=2)
    trace = []
    compute_flow(a, a, FlowParams(pyramid_levels=3), trace=trace)
    assert [lt.shape for lt in trace] == [(16, 16), (32, 32), (64, 64)]


def test_finest_energy_decreases_from_zero_flow():
    a = band_limited_texture(seed=5)
    b = np.roll(a, (0, 1), axis=(0, 1))
    f = compute_flow(a, b, FlowParams(pyramid_levels=1))
    zero = FlowField.zeros(a.shape)
    assert flow_energy(a, b, f, FlowParams(pyramid_levels=1)) < flow_energy(a, b, zero)


def test_dimension_mismatch():
    with pytest.raises(FlowError):
        compute_flow(np.zeros((8, 8)), np.zeros((8, 9)))


def test_non_finite_rejected():
    a = np.zeros((8, 8))
    b = a.copy()
    b[3, 3] = np.nan
    with pytest.raises(FlowError):
        compute_flow(a, b)


@pytest.mark.parametrize("kwargs", [
    {"smoothness_weight": 0}, {"gradient_weight": -1}, {"pyramid_levels": 0},
    {"scale_factor": 1.0}, {"iterations_per_level": 0}, {"convergence_epsilon": 0},
    {"relaxation": 2.0},
])
def test_params_validated(kwargs):
    with pytest.raises(FlowError):
        FlowParams(**kwargs)


def test_to_polar_examples():
    f = FlowField(np.array([[1.0, 0.0, -1.0, 0.0]]), np.array([[1.0, 0.0, 0.0, -2.0]]))
    p = to_polar(f)
    assert p.magnitude[0, 0] == pytest.approx(np.sqrt(2))
    assert p.angle[0, 0] == pytest.approx(45.0)
    assert p.magnitude[0, 1] == 0.0 and p.angle[0, 1] == 0.0
    assert p.magnitude[0, 2] == 1.0 and p.angle[0, 2] == -180.0
    assert p.angle[0, 3] == pytest.approx(-90.0)


def test_to_polar_negative_zero_components():
    f = FlowField(np.array([[-0.0, -1.0]]), np.array([[-0.0, -0.0]]))
    p = to_polar(f)
    assert p.angle[0, 0] == 0.0
    assert p.angle[0, 1] == -180.0


finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (3, 4), elements=finite), arrays(np.float64, (3, 4), elements=finite))
def test_polar_round_trip(vx, vy):
    p = to_polar(FlowField(vx, vy))
    assert np.all((p.angle >= -180) & (p.angle < 180))
    assert np.all(p.magnitude >= 0)
    rx = p.magnitude * np.cos(np.radians(p.angle))
    ry = p.magnitude * np.sin(np.radians(p.angle))
    scale = np.maximum(p.magnitude, 1e-300)
    assert np.all(np.abs(rx - vx) <= 1e-9 * scale + 1e-300)
    assert np.all(np.abs(ry - vy) <= 1e-9 * scale + 1e-300)


def test_flow_series_counts_and_static():
    frame = band_limited_texture(32, seed=9)
    seq = ImageSequence(np.stack([frame] * 5), 29)
    flows = flow_series(seq)
    assert len(flows) == 4
    assert max(f.magnitude().max() for f in flows) < 1e-6
    seq3 = ImageSequence(np.stack([frame] * 3), 29)
    assert len(flow_series(seq3)) == 2


def test_flow_series_order_maps_frame_n_to_n_plus_1():
    a = band_limited_texture(seed=1)
    frames = np.stack([a, np.roll(a, 1, axis=1), np.roll(a, 1, axis=1)])
    flows = flow_series(ImageSequence(frames, 29))
    region = _interior(64, 10)
    assert _median_epe(flows[0], (1, 0), region) < 0.3
    assert flows[1].magnitude().max() < 1e-6


def test_pendulum_flow_speed_follows_analytic_velocity():
    spec = PendulumSpec(frames=51)
    seq, gt = gen_pendulum(spec)
    flows = flow_series(seq)
    bob = gt.points["bob"]
    measured = []
    for n, f in enumerate(flows):
        x, y = np.rint(bob[n]).astype(int)
        measured.append(f.magnitude()[y, x])
    measured = np.array(measured)
    t = np.arange(len(flows)) + 0.5
    analytic = spec.amplitude * spec.angular_frequency * np.abs(
        np.sin(spec.angular_frequency * t + spec.phase))
    assert np.corrcoef(measured, analytic)[0, 1] > 0.95
    crossings = analytic > 0.9 * analytic.max()
    turning = analytic < 0.2 * analytic.max()
    assert measured[crossings].min() > 3 * measured[turning].max()


def test_flow_csv(tmp_path):
    f = FlowField(np.array([[0.5, 1.0]]), np.array([[0.0, -1.0]]))
    write_flow_csv(f, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,y,vx,vy"
    assert lines[1:] == ["0,0,0.5,0.0", "1,0,1.0,-1.0"]
