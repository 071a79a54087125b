import math

import numpy as np
import pytest

from gazefovea.errors import EmptyTraceError, InvalidSigmaError, ZeroMassError
from gazefovea.heatmap import (
    GazeTrace,
    build_heatmap,
    default_sigma_px,
    gaussian_smooth,
    normalize,
    rasterize_trace,
    read_float_grid,
    write_float_grid,
    write_grayscale_png,
)


def trace_of(points, w, h, **kwargs):
    return GazeTrace.from_points(points, w, h, **kwargs)


# --- trace ingest -----------------------------------------------------------

def test_ingest_clamps_out_of_bounds_points_and_counts_them():
    trace = trace_of([(-3.0, 5.0), (20.0, 7.5), (4.0, 99.0)], 16, 16)
    assert trace.clamped_count == 3
    assert np.all(trace.points[:, 0] >= 0) and np.all(trace.points[:, 0] < 16)
    assert np.all(trace.points[:, 1] >= 0) and np.all(trace.points[:, 1] < 16)


def test_ingest_keeps_in_bounds_points_untouched():
    trace = trace_of([(1.5, 2.5), (0.0, 15.9)], 16, 16)
    assert trace.clamped_count == 0
    assert trace.points.tolist() == [[1.5, 2.5], [0.0, 15.9]]


def test_ingest_scales_normalized_coordinates():
    trace = trace_of([(0.5, 0.25)], 100, 40, normalized=True)
    assert trace.points.tolist() == [[50.0, 10.0]]


def test_ingest_rejects_decreasing_timestamps():
    with pytest.raises(ValueError):
        trace_of([(1, 1, 2.0), (2, 2, 1.0)], 16, 16)


def test_ingest_allows_duplicate_timestamps():
    trace = trace_of([(1, 1, 1.0), (2, 2, 1.0)], 16, 16)
    assert trace.timestamps.tolist() == [1.0, 1.0]


# --- rasterize --------------------------------------------------------------

def test_rasterize_floor_bins_single_point():
    grid = rasterize_trace(trace_of([(5.2, 7.9)], 16, 16))
    assert grid[7, 5] == 1.0
    assert grid.sum() == 1.0


def test_rasterize_accumulates_coincident_points():
    grid = rasterize_trace(trace_of([(0.0, 0.0), (0.0, 0.0)], 16, 16))
    assert grid[0, 0] == 2.0
    assert grid.sum() == 2.0


def test_rasterize_total_equals_point_count():
    rng = np.random.default_rng(11)
    points = np.column_stack([rng.uniform(0, 32, 100), rng.uniform(0, 24, 100)])
    grid = rasterize_trace(trace_of(points, 32, 24))
    assert grid.shape == (24, 32)
    assert grid.sum() == 100.0


def test_rasterize_empty_trace_raises():
    with pytest.raises(EmptyTraceError):
        rasterize_trace(trace_of([], 16, 16))


# --- smoothing --------------------------------------------------------------

def test_smooth_centered_impulse_is_rotation_symmetric():
    grid = np.zeros((64, 64))
    grid[32, 32] = 1.0  # grid center for the odd-index convention used below
    out = gaussian_smooth(grid, sigma_px=2.0)
    assert np.unravel_index(out.argmax(), out.shape) == (32, 32)
    # crop to the odd-sized block centered on the impulse so rot90 maps it onto itself
    block = out[32 - 31 : 32 + 32, 32 - 31 : 32 + 32]
    np.testing.assert_allclose(block, np.rot90(block), atol=1e-9)


def test_smooth_translation_equivariance_away_from_borders():
    a = np.zeros((128, 128))
    b = np.zeros((128, 128))
    a[32, 32] = 1.0
    b[40, 35] = 1.0  # shifted by (+8 rows, +3 cols)
    out_a = gaussian_smooth(a, sigma_px=2.0)
    out_b = gaussian_smooth(b, sigma_px=2.0)
    np.testing.assert_allclose(out_b[8:, 3:], out_a[:-8, :-3], atol=1e-9)


def test_smooth_zero_grid_stays_zero():
    out = gaussian_smooth(np.zeros((8, 8)), sigma_px=1.0)
    assert not out.any()


@pytest.mark.parametrize("sigma", [0.0, -1.0, float("nan"), float("inf")])
def test_smooth_rejects_bad_sigma(sigma):
    with pytest.raises(InvalidSigmaError):
        gaussian_smooth(np.ones((4, 4)), sigma)


def test_smooth_preserves_mass_away_from_borders():
    grid = np.zeros((64, 64))
    grid[30, 30] = 3.0
    out = gaussian_smooth(grid, sigma_px=2.0)
    assert out.sum() == pytest.approx(3.0, abs=1e-9)


# --- normalize --------------------------------------------------------------

def test_normalize_uniform_grid():
    hm = normalize(np.ones((4, 4)), sigma_px=1.0)
    np.testing.assert_allclose(hm.values, 1.0 / 16.0)


def test_normalize_delta_grid():
    grid = np.zeros((4, 4))
    grid[1, 2] = 2.0
    hm = normalize(grid, sigma_px=1.0)
    assert hm.values[1, 2] == 1.0
    assert hm.values.sum() == 1.0


def test_normalize_zero_mass_raises():
    with pytest.raises(ZeroMassError):
        normalize(np.zeros((4, 4)), sigma_px=1.0)


# --- build_heatmap ----------------------------------------------------------

def test_build_single_fixation_peaks_at_the_fixation():
    trace = trace_of([(20.0, 20.0)] * 10, 64, 64)
    hm = build_heatmap(trace, sigma_px=3.0)
    assert np.unravel_index(hm.values.argmax(), hm.values.shape) == (20, 20)
    assert hm.values.sum() == pytest.approx(1.0, abs=1e-6)


def test_build_two_clusters_give_two_local_maxima():
    rng = np.random.default_rng(5)
    # jitter within one pixel cell so each cluster bins to a single peak
    pts = [(10.5 + rng.uniform(-0.4, 0.4), 10.5 + rng.uniform(-0.4, 0.4)) for _ in range(10)]
    pts += [(50.5 + rng.uniform(-0.4, 0.4), 50.5 + rng.uniform(-0.4, 0.4)) for _ in range(10)]
    hm = build_heatmap(trace_of(pts, 64, 64), sigma_px=2.0)
    v = hm.values
    maxima = [
        (r, c)
        for r in range(1, 63)
        for c in range(1, 63)
        if v[r, c] > 0 and v[r, c] == v[r - 1 : r + 2, c - 1 : c + 2].max()
        and (v[r, c] > v[r - 1 : r + 2, c - 1 : c + 2]).sum() == 8
    ]
    assert any(abs(r - 10) <= 1 and abs(c - 10) <= 1 for r, c in maxima)
    assert any(abs(r - 50) <= 1 and abs(c - 50) <= 1 for r, c in maxima)


def test_build_empty_trace_raises():
    with pytest.raises(EmptyTraceError):
        build_heatmap(trace_of([], 16, 16), sigma_px=1.0)


def test_build_is_permutation_invariant():
    rng = np.random.default_rng(3)
    pts = [(rng.uniform(0, 32), rng.uniform(0, 32)) for _ in range(40)]
    fwd = build_heatmap(trace_of(pts, 32, 32), sigma_px=1.5)
    rev = build_heatmap(trace_of(pts[::-1], 32, 32), sigma_px=1.5)
    np.testing.assert_array_equal(fwd.values, rev.values)


def test_build_mass_stays_local_to_the_trace():
    sigma = 2.0
    radius = math.ceil(3 * sigma)
    trace = trace_of([(20.0, 24.0), (30.0, 30.0)], 64, 64)
    hm = build_heatmap(trace, sigma_px=sigma)
    mask = np.zeros_like(hm.values, dtype=bool)
    for x, y in trace.points:
        r, c = int(y), int(x)
        mask[max(0, r - radius) : r + radius + 1, max(0, c - radius) : c + radius + 1] = True
    assert hm.values[mask].sum() >= 0.99


def test_build_normalizes_for_randomized_traces():
    rng = np.random.default_rng(17)
    for _ in range(25):
        w, h = int(rng.integers(8, 100)), int(rng.integers(8, 100))
        n = int(rng.integers(1, 50))
        pts = np.column_stack([rng.uniform(0, w, n), rng.uniform(0, h, n)])
        hm = build_heatmap(trace_of(pts, w, h))
        assert abs(hm.values.sum() - 1.0) <= 1e-6
        assert hm.values.min() >= 0.0


def test_default_sigma_is_two_percent_of_the_diagonal():
    assert default_sigma_px(300, 400) == pytest.approx(0.02 * 500)


# --- exports ----------------------------------------------------------------

def test_float_grid_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    grid = rng.random((12, 7))
    path = tmp_path / "grid.gzhm"
    write_float_grid(grid, path)
    back = read_float_grid(path)
    np.testing.assert_array_equal(back, grid.astype(np.float32).astype(np.float64))


def test_float_grid_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.gzhm"
    path.write_bytes(b"NOPE" + b"\x00" * 12)
    with pytest.raises(ValueError, match="magic"):
        read_float_grid(path)


def test_float_grid_rejects_truncated_file(tmp_path):
    path = tmp_path / "short.gzhm"
    path.write_bytes(b"GZ")
    with pytest.raises(ValueError, match="truncated"):
        read_float_grid(path)


def test_grayscale_export_rescales_to_full_range(tmp_path):
    from PIL import Image

    grid = np.zeros((8, 8))
    grid[3, 4] = 0.25
    path = tmp_path / "hm.png"
    write_grayscale_png(grid, path)
    img = np.asarray(Image.open(path))
    assert img.max() == 255
    assert img[3, 4] == 255
