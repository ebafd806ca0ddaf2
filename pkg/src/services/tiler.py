"""
슬라이딩 윈도우 장면 추론

윈도우별 로짓을 float64 누적기에 더하고 덮인 횟수로 나눠 평균합니다.
누적은 항상 행 우선 정렬 순서로 수행되므로 결과는 윈도우 방문 순서와 무관합니다.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from src.data.scene import RasterScene
from src.services.assembly import ModelAssembly
from src.utils.errors import ConfigurationError, CoverageError, DimensionError, FormatError
from src.utils.grid import grid_origins

logger = logging.getLogger(__name__)

# (pre 윈도우 [3×w×w], post 윈도우 [3×w×w]) -> 로짓 [2×w×w]
WindowPredictor = Callable[[np.ndarray, np.ndarray], np.ndarray]

# TP 초록, FP 빨강, FN 흰색, TN 검정
ERROR_COLORS = {
    "tp": (0, 255, 0),
    "fp": (255, 0, 0),
    "fn": (255, 255, 255),
    "tn": (0, 0, 0),
}


@dataclass
class TileJob:
    window: int = 128
    stride: int = 32
    workers: int = 1

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ConfigurationError(f"window {self.window} and stride {self.stride} must be >= 1")
        if self.stride > self.window:
            raise ConfigurationError(f"stride {self.stride} larger than window {self.window}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")


class SceneLogits:
    """로짓 합 [2×H×W] (float64)과 덮인 횟수 [H×W]"""

    def __init__(self, height: int, width: int, classes: int = 2):
        self.sum_logits = np.zeros((classes, height, width), dtype=np.float64)
        self.count = np.zeros((height, width), dtype=np.int64)

    def add(self, origin: tuple[int, int], logits: np.ndarray) -> None:
        row, col = origin
        _, h, w = logits.shape
        self.sum_logits[:, row:row + h, col:col + w] += logits
        self.count[row:row + h, col:col + w] += 1

    def average(self) -> np.ndarray:
        holes = int(np.count_nonzero(self.count == 0))
        if holes:
            raise CoverageError(f"{holes} pixels not covered by any window")
        return self.sum_logits / self.count[None]


def tile_origins(height: int, width: int, window: int, stride: int) -> list[tuple[int, int]]:
    """등차 시작 좌표 + 끝에 맞춘 마지막 행/열, 행 우선 정렬"""
    return grid_origins(height, width, window, stride)


def _predictor(model: Union[ModelAssembly, WindowPredictor], job: TileJob) -> WindowPredictor:
    if isinstance(model, ModelAssembly):
        if model.input_size != job.window:
            raise DimensionError(
                f"window {job.window} does not match model input size {model.input_size}"
            )
        return model.predict_logits
    return model


def infer_scene(
    model: Union[ModelAssembly, WindowPredictor],
    scene: RasterScene,
    job: TileJob | None = None,
    origins: Optional[Sequence[tuple[int, int]]] = None,
) -> tuple[np.ndarray, np.ndarray, SceneLogits]:
    """
    장면 전체를 윈도우 단위로 추론하고 로짓을 평균합니다.

    Args:
        model: 모델 또는 윈도우 예측 함수
        scene: 장면
        job: 윈도우 / stride / 스레드 수
        origins: 윈도우 계산 순서 (없으면 행 우선). 누적 순서에는 영향 없음

    Returns:
        (평균 로짓 [2×H×W] float64, 예측 마스크 [H×W] uint8, SceneLogits)
    """
    job = job or TileJob()
    predict = _predictor(model, job)
    grid = tile_origins(scene.height, scene.width, job.window, job.stride)
    visit = list(origins) if origins is not None else grid
    if sorted(visit) != grid:
        raise ConfigurationError("origins must be a permutation of the tiling grid")

    def run(origin: tuple[int, int]) -> np.ndarray:
        row, col = origin
        window = (slice(None), slice(row, row + job.window), slice(col, col + job.window))
        return np.asarray(predict(scene.pre[window], scene.post[window]), dtype=np.float64)

    if job.workers > 1:
        with ThreadPoolExecutor(max_workers=job.workers) as pool:
            results = dict(zip(visit, pool.map(run, visit)))
    else:
        results = {origin: run(origin) for origin in visit}

    acc = SceneLogits(scene.height, scene.width)
    for origin in grid:
        acc.add(origin, results[origin])
    logits = acc.average()
    pred = logits.argmax(axis=0).astype(np.uint8)
    logger.debug(
        "%s: %d windows, coverage %d..%d",
        scene.fire_id,
        len(grid),
        acc.count.min(),
        acc.count.max(),
    )
    return logits, pred, acc


def error_map_rgb(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """TP/FP/FN/TN 색상 이미지 [H×W×3] uint8"""
    pred = np.asarray(pred).astype(bool)
    target = np.asarray(target).astype(bool)
    if pred.shape != target.shape:
        raise DimensionError(f"pred shape {pred.shape} != target shape {target.shape}")
    image = np.zeros(pred.shape + (3,), dtype=np.uint8)
    image[pred & target] = ERROR_COLORS["tp"]
    image[pred & ~target] = ERROR_COLORS["fp"]
    image[~pred & target] = ERROR_COLORS["fn"]
    return image


def emit_error_map(pred: np.ndarray, target: np.ndarray, path: str | Path) -> Path:
    """
    오류 지도를 binary PPM (P6) 이미지로 씁니다.

    Args:
        pred: 예측 마스크
        target: 정답 마스크
        path: 출력 경로

    Returns:
        출력 경로
    """
    image = error_map_rgb(pred, target)
    height, width, _ = image.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(image.tobytes())
    return path


def read_ppm(path: str | Path) -> np.ndarray:
    """emit_error_map이 쓴 P6 이미지를 [H×W×3]으로 읽습니다."""
    payload = Path(path).read_bytes()
    parts = payload.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P6":
        raise FormatError(f"{path} is not a binary PPM image", offset=0)
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width, 3)
