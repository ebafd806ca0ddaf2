"""
infer Tool

장면 하나를 슬라이딩 윈도우로 추론해 마스크 (.npy)와 오류 지도 (.ppm) 저장
"""

from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import Field

from src.data.raster_io import read_scene
from src.models.schemas import InferResult
from src.nn.objective import confusion
from src.services.assembly import assembly_from_config
from src.services.checkpoint import load_checkpoint, read_checkpoint_header
from src.services.tiler import TileJob, emit_error_map, infer_scene, tile_origins
from src.tools.evaluate import MASK_SUFFIX
from src.utils.config import load_run_config

ERROR_MAP_SUFFIX = "_errors.ppm"


def infer(
    scene_path: str = Field(
        description="BARC1 장면 파일 경로",
    ),
    checkpoint: str = Field(
        description="체크포인트 경로",
    ),
    config_path: Optional[str] = Field(
        default=None,
        description="실행 설정 YAML 경로",
    ),
    overrides: Optional[list[str]] = Field(
        default=None,
        description="설정 덮어쓰기 (예: infer.workers=4)",
    ),
    out_dir: Optional[str] = Field(
        default=None,
        description="출력 디렉터리 (기본값: output_dir/predictions)",
    ),
    error_map: bool = Field(
        default=True,
        description="정답 마스크와 비교한 TP/FP/FN 오류 지도 저장 여부",
    ),
    force: bool = Field(
        default=False,
        description="config hash가 달라도 체크포인트 적재",
    ),
) -> InferResult:
    """
    장면 전체 예측 마스크를 만듭니다.

    Args:
        scene_path: 장면 파일
        checkpoint: 체크포인트
        config_path: 실행 설정 경로
        overrides: 설정 덮어쓰기
        out_dir: 출력 디렉터리
        error_map: 오류 지도 저장 여부
        force: hash 불일치 무시

    Returns:
        InferResult: 마스크 / 오류 지도 경로와 혼동 행렬
    """
    config = load_run_config(config_path, overrides or [])
    scene = read_scene(scene_path)
    header = read_checkpoint_header(checkpoint)
    assembly = assembly_from_config(config, header.strategy)
    load_checkpoint(checkpoint, assembly, force=force)

    job = TileJob(config.infer.window, config.infer.stride, config.infer.workers)
    _, pred, _ = infer_scene(assembly, scene, job)

    out = Path(out_dir or Path(config.output_dir) / "predictions")
    out.mkdir(parents=True, exist_ok=True)
    mask_path = out / f"{scene.fire_id}{MASK_SUFFIX}"
    np.save(mask_path, pred, allow_pickle=False)

    map_path = None
    if error_map:
        map_path = emit_error_map(pred, scene.mask, out / f"{scene.fire_id}{ERROR_MAP_SUFFIX}")

    return InferResult(
        fire_id=scene.fire_id,
        mask_path=str(mask_path),
        error_map_path=str(map_path) if map_path else None,
        counts=confusion(pred, scene.mask),
        windows=len(tile_origins(scene.height, scene.width, job.window, job.stride)),
    )
