"""
격자 좌표 유틸리티

패치 분할과 슬라이딩 윈도우 추론이 공유하는 시작 좌표 계산
"""

from src.utils.errors import DataError


def axis_starts(length: int, window: int, stride: int) -> list[int]:
    """
    한 축에 대한 윈도우 시작 좌표를 계산합니다.

    stride 간격의 등차 좌표에, 딱 나누어떨어지지 않으면 끝에 맞춘 (flush-edge)
    마지막 좌표를 추가합니다. 결과는 오름차순이며 중복이 없습니다.

    Args:
        length: 축 길이 (픽셀)
        window: 윈도우 크기
        stride: 이동 간격

    Returns:
        시작 좌표 목록
    """
    if window < 1 or stride < 1:
        raise DataError(f"window and stride must be positive (window={window}, stride={stride})")
    if length < window:
        raise DataError(f"extent {length} is smaller than window {window}")

    last = length - window
    starts = list(range(0, last + 1, stride))
    if starts[-1] != last:
        starts.append(last)
    return starts


def grid_origins(height: int, width: int, window: int, stride: int) -> list[tuple[int, int]]:
    """행 우선 순서의 (row, col) 시작 좌표 목록"""
    rows = axis_starts(height, window, stride)
    cols = axis_starts(width, window, stride)
    return [(r, c) for r in rows for c in cols]
