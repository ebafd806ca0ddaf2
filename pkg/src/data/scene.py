"""
장면 / 패치 자료형

RasterScene: pre/post 밴드 [3×H×W] (B4, B8, B12 반사율), 이진 마스크, QA 비율, 메타데이터
"""

from dataclasses import dataclass, field

import numpy as np

from src.models.schemas import BAND_ORDER, QaFractions
from src.utils.errors import DataError, DimensionError


@dataclass
class RasterScene:
    fire_id: str
    year: int
    biome: str
    pre: np.ndarray
    post: np.ndarray
    mask: np.ndarray
    area_ha: float
    qa: QaFractions = field(default_factory=QaFractions)
    bands: tuple[str, ...] = BAND_ORDER

    def __post_init__(self):
        self.pre = np.asarray(self.pre, dtype=np.float32)
        self.post = np.asarray(self.post, dtype=np.float32)
        mask = np.asarray(self.mask)
        if self.pre.ndim != 3 or self.pre.shape[0] != len(self.bands):
            raise DimensionError(f"{self.fire_id}: pre bands must be [3×H×W], got {self.pre.shape}")
        if self.post.shape != self.pre.shape:
            raise DimensionError(f"{self.fire_id}: post {self.post.shape} != pre {self.pre.shape}")
        if mask.shape != self.pre.shape[1:]:
            raise DimensionError(f"{self.fire_id}: mask {mask.shape} != {self.pre.shape[1:]}")
        if not np.isin(mask, (0, 1)).all():
            raise DataError(f"{self.fire_id}: mask values must be 0 or 1")
        self.mask = mask.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.pre.shape[1]

    @property
    def width(self) -> int:
        return self.pre.shape[2]


@dataclass
class Patch:
    """장면 안의 size×size 창"""

    fire_id: str
    origin: tuple[int, int]
    pre: np.ndarray
    post: np.ndarray
    mask: np.ndarray


def normalize_bands(bands: np.ndarray, mean: list[float], std: list[float]) -> np.ndarray:
    """밴드별 표준화 (x - mean) / std"""
    mean_arr = np.asarray(mean, dtype=np.float32)[:, None, None]
    std_arr = np.asarray(std, dtype=np.float32)[:, None, None]
    if mean_arr.shape[0] != bands.shape[0] or std_arr.shape[0] != bands.shape[0]:
        raise DimensionError(f"{len(mean)} band statistics for {bands.shape[0]} bands")
    if (std_arr <= 0).any():
        raise DataError("band std must be positive")
    return (bands - mean_arr) / std_arr
