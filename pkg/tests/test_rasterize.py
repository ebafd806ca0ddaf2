"""화재 경계 폴리곤 래스터화"""

import numpy as np
import pytest

from src.data.rasterize import rasterize_polygon, rasterize_polygons
from src.utils.errors import DataError


def test_axis_aligned_square():
    mask = rasterize_polygon([(1, 1), (3, 1), (3, 3), (1, 3)], 4, 4)
    expected = np.zeros((4, 4), dtype=np.uint8)
    expected[1:3, 1:3] = 1
    assert np.array_equal(mask, expected)
    assert mask.dtype == np.uint8


def test_centers_on_boundary_follow_top_left_rule():
    mask = rasterize_polygon([(0.5, 0.5), (2.5, 0.5), (2.5, 2.5), (0.5, 2.5)], 3, 3)
    assert mask.tolist() == [[1, 1, 0], [1, 1, 0], [0, 0, 0]]


def test_vertex_order_does_not_matter():
    polygon = [(2.2, 1.0), (9.7, 3.1), (6.4, 8.8), (1.3, 6.0)]
    forward = rasterize_polygon(polygon, 10, 10)
    assert np.array_equal(forward, rasterize_polygon(polygon[::-1], 10, 10))
    assert np.array_equal(forward, rasterize_polygon(polygon[2:] + polygon[:2], 10, 10))


def test_pixel_count_tracks_area():
    triangle = [(0, 0), (64, 0), (0, 64)]
    mask = rasterize_polygon(triangle, 64, 64)
    assert abs(int(mask.sum()) - 64 * 64 / 2) <= 64


def test_polygon_outside_grid_is_empty():
    assert rasterize_polygon([(20, 20), (30, 20), (25, 30)], 8, 8).sum() == 0


def test_multipart_union():
    left = [(0, 0), (2, 0), (2, 2), (0, 2)]
    right = [(4, 4), (6, 4), (6, 6), (4, 6)]
    overlap = [(1, 1), (3, 1), (3, 3), (1, 3)]
    mask = rasterize_polygons([left, right, overlap], 6, 6)
    assert mask.sum() == 4 + 4 + 4 - 1
    assert mask.max() == 1


def test_degenerate_polygon():
    with pytest.raises(DataError):
        rasterize_polygon([(0, 0), (1, 1)], 4, 4)
    with pytest.raises(DataError):
        rasterize_polygon([(0, 0, 1), (1, 1, 1), (2, 0, 1)], 4, 4)


def winding_mask(polygon, height, width):
    """픽셀 중심마다 꼭짓점 각도 변화를 합산 (경계 위 중심이 없는 폴리곤 전용)"""
    cx = np.arange(width)[None, :] + 0.5
    cy = np.arange(height)[:, None] + 0.5
    total = np.zeros((height, width))
    for (x1, y1), (x2, y2) in zip(polygon, polygon[1:] + polygon[:1]):
        ax, ay, bx, by = x1 - cx, y1 - cy, x2 - cx, y2 - cy
        total += np.arctan2(ax * by - ay * bx, ax * bx + ay * by)
    return (np.abs(total) > np.pi).astype(np.uint8)


@pytest.mark.parametrize("seed", range(10))
def test_random_star_polygons_match_winding_number(seed):
    rng = np.random.default_rng(seed)
    for _ in range(5):
        n = int(rng.integers(3, 10))
        angles = np.sort(rng.uniform(0, 2 * np.pi, n))
        radii = rng.uniform(2.0, 14.0, n)
        center = rng.uniform(6.0, 26.0, 2)
        polygon = [
            (center[0] + r * np.cos(a), center[1] + r * np.sin(a)) for a, r in zip(angles, radii)
        ]
        assert np.array_equal(rasterize_polygon(polygon, 32, 32), winding_mask(polygon, 32, 32))


@pytest.mark.parametrize("seed", range(10))
def test_shared_edges_through_centers_partition_exactly(seed):
    # 꼭짓점이 모두 픽셀 중심: 공유 변 위의 중심은 정확히 한 조각에만 속함
    rng = np.random.default_rng(seed)
    x0, y0 = rng.integers(0, 6, 2) + 0.5
    x1, y1 = x0 + rng.integers(4, 10), y0 + rng.integers(4, 10)
    apex = (x0 + rng.integers(1, int(x1 - x0)), y0 + rng.integers(1, int(y1 - y0)))
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    whole = rasterize_polygon(corners, 16, 16)
    pieces = [
        rasterize_polygon([apex, a, b], 16, 16) for a, b in zip(corners, corners[1:] + corners[:1])
    ]
    assert np.array_equal(sum(p.astype(int) for p in pieces), whole)

    cx = np.arange(16)[None, :] + 0.5
    cy = np.arange(16)[:, None] + 0.5
    half_open = (x0 <= cx) & (cx < x1) & (y0 <= cy) & (cy < y1)
    assert np.array_equal(whole, half_open.astype(np.uint8))
