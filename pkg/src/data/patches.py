"""
장면 패치 분할
"""

from src.data.scene import Patch, RasterScene
from src.utils.grid import grid_origins


def make_patches(scene: RasterScene, size: int = 128, stride: int | None = None) -> list[Patch]:
    """
    장면을 size×size 패치로 자릅니다. 나누어떨어지지 않으면 끝에 맞춘 행/열을 추가합니다.

    Args:
        scene: 장면
        size: 패치 크기
        stride: 이동 간격 (기본값 size)

    Returns:
        행 우선 순서의 Patch 목록
    """
    stride = stride or size
    patches = []
    for row, col in grid_origins(scene.height, scene.width, size, stride):
        window = (slice(row, row + size), slice(col, col + size))
        patches.append(
            Patch(
                fire_id=scene.fire_id,
                origin=(row, col),
                pre=scene.pre[(slice(None), *window)],
                post=scene.post[(slice(None), *window)],
                mask=scene.mask[window],
            )
        )
    return patches
