"""
evaluate Tool

체크포인트 (슬라이딩 윈도우 추론) 또는 저장된 예측 마스크로 분할별 IoU / F1 계산
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import Field

from src.data.raster_io import read_scenes_dir
from src.data.scene import RasterScene
from src.data.splits import read_manifest, select
from src.models.schemas import EvalReport
from src.nn.objective import confusion, f1, iou, sum_counts
from src.services.assembly import assembly_from_config
from src.services.checkpoint import load_checkpoint, read_checkpoint_header
from src.services.tiler import TileJob, infer_scene
from src.utils.config import load_run_config
from src.utils.errors import ConfigurationError, DataError

logger = logging.getLogger(__name__)

MASK_SUFFIX = ".npy"


def _scenes_for(config, partition: str) -> list[RasterScene]:
    scenes = read_scenes_dir(config.data.scenes_dir)
    if partition == "all":
        return scenes
    return select(scenes, read_manifest(config.data.manifest_path), partition)


def load_mask(directory: Path, fire_id: str) -> np.ndarray:
    """infer가 저장한 <fire_id>.npy 예측 마스크"""
    path = directory / f"{fire_id}{MASK_SUFFIX}"
    if not path.is_file():
        raise FileNotFoundError(f"prediction mask not found: {path}")
    return np.load(path, allow_pickle=False)


def evaluate(
    config_path: Optional[str] = Field(
        default=None,
        description="실행 설정 YAML 경로",
    ),
    overrides: Optional[list[str]] = Field(
        default=None,
        description="설정 덮어쓰기 (예: infer.stride=64)",
    ),
    partition: str = Field(
        default="test",
        description="평가 분할: train, test, all (all은 매니페스트 없이 전체 장면)",
    ),
    checkpoint: Optional[str] = Field(
        default=None,
        description="평가할 체크포인트 경로",
    ),
    predictions_dir: Optional[str] = Field(
        default=None,
        description="<fire_id>.npy 예측 마스크 디렉터리 (checkpoint 대신 사용)",
    ),
    force: bool = Field(
        default=False,
        description="config hash가 달라도 체크포인트 적재",
    ),
) -> EvalReport:
    """
    분할의 모든 장면에 대해 혼동 행렬을 합산 (micro)하고 IoU / F1을 계산합니다.

    Args:
        config_path: 실행 설정 경로
        overrides: 설정 덮어쓰기
        partition: 평가 분할
        checkpoint: 체크포인트 경로
        predictions_dir: 예측 마스크 디렉터리
        force: hash 불일치 무시

    Returns:
        EvalReport: tp/fp/fn/tn, IoU, F1
    """
    if partition not in ("train", "test", "all"):
        raise ConfigurationError(f"unknown partition {partition!r} (train, test, all)")
    if (checkpoint is None) == (predictions_dir is None):
        raise ConfigurationError("give exactly one of checkpoint or predictions_dir")

    config = load_run_config(config_path, overrides or [])
    scenes = _scenes_for(config, partition)
    if not scenes:
        raise DataError(f"no scenes in partition {partition!r}")

    strategy = None
    if checkpoint is not None:
        header = read_checkpoint_header(checkpoint)
        strategy = header.strategy.value
        assembly = assembly_from_config(config, header.strategy)
        load_checkpoint(checkpoint, assembly, force=force)
        job = TileJob(config.infer.window, config.infer.stride, config.infer.workers)
        preds = {scene.fire_id: infer_scene(assembly, scene, job)[1] for scene in scenes}
    else:
        directory = Path(predictions_dir)
        preds = {scene.fire_id: load_mask(directory, scene.fire_id) for scene in scenes}

    counts = sum_counts(confusion(preds[scene.fire_id], scene.mask) for scene in scenes)
    report = EvalReport(
        split=partition,
        strategy=strategy,
        n_scenes=len(scenes),
        counts=counts,
        iou=iou(counts),
        f1=f1(counts),
    )
    logger.info(
        "%s (%d scenes): IoU %.4f F1 %.4f", partition, len(scenes), report.iou, report.f1
    )
    return report
