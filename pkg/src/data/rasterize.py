"""
화재 경계 폴리곤 래스터화

픽셀 중심 (col + 0.5, row + 0.5)에 대한 even-odd 교차 판정.
경계 위 중심은 위쪽/왼쪽 변에 포함되고 아래쪽/오른쪽 변에는 포함되지 않습니다.
"""

from typing import Sequence

import numpy as np

from src.utils.errors import DataError

Vertex = tuple[float, float]


def _crossings(polygon: Sequence[Vertex], height: int, width: int) -> np.ndarray:
    if len(polygon) < 3:
        raise DataError(f"polygon needs at least 3 vertices, got {len(polygon)}")
    verts = np.asarray(polygon, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise DataError(f"polygon vertices must be (x, y) pairs, got shape {verts.shape}")

    px = np.arange(width, dtype=np.float64)[None, :] + 0.5
    py = np.arange(height, dtype=np.float64)[:, None] + 0.5
    inside = np.zeros((height, width), dtype=bool)
    for (x1, y1), (x2, y2) in zip(verts, np.roll(verts, -1, axis=0)):
        # 공유 변은 두 폴리곤에서 같은 교차 좌표를 내야 함 (낮은 y 끝점 기준)
        if y1 > y2:
            x1, y1, x2, y2 = x2, y2, x1, y1
        straddles = (y1 > py) != (y2 > py)
        if not straddles.any():
            continue
        x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (px < x_cross)
    return inside


def rasterize_polygon(polygon: Sequence[Vertex], height: int, width: int) -> np.ndarray:
    """
    단일 폴리곤을 H×W 이진 마스크로 변환합니다.

    Args:
        polygon: 픽셀 좌표 (x, y) 꼭짓점 목록
        height, width: 출력 크기

    Returns:
        uint8 마스크 (중심이 내부이면 1)
    """
    return _crossings(polygon, height, width).astype(np.uint8)


def rasterize_polygons(
    polygons: Sequence[Sequence[Vertex]], height: int, width: int
) -> np.ndarray:
    """여러 경계 링의 합집합 (다중 파트 화재 경계)"""
    mask = np.zeros((height, width), dtype=bool)
    for polygon in polygons:
        mask |= _crossings(polygon, height, width)
    return mask.astype(np.uint8)
