"""
synthgen Tool

시드 고정 합성 화재 흔적 장면을 BARC1 파일로 생성
"""

from typing import Optional

from pydantic import Field

from src.data.raster_io import write_scenes_dir
from src.data.synth import synth_generate
from src.models.schemas import SynthgenResult
from src.nn.rng import Rng
from src.utils.config import load_run_config


def synthgen(
    config_path: Optional[str] = Field(
        default=None,
        description="실행 설정 YAML 경로 (없으면 BURNSCAR_CONFIG 또는 기본값)",
    ),
    overrides: Optional[list[str]] = Field(
        default=None,
        description="section.key=value 형식의 설정 덮어쓰기 (예: data.n_scenes=16)",
    ),
    out_dir: Optional[str] = Field(
        default=None,
        description="장면 저장 디렉터리 (기본값: data.scenes_dir)",
    ),
) -> SynthgenResult:
    """
    합성 장면 데이터셋을 생성합니다.

    Args:
        config_path: 실행 설정 경로
        overrides: 설정 덮어쓰기
        out_dir: 저장 디렉터리

    Returns:
        SynthgenResult: 저장 위치와 fire_id 목록
    """
    config = load_run_config(config_path, overrides or [])
    data = config.data
    scenes = synth_generate(
        Rng(data.seed), data.n_scenes, data.scene_size, data.scene_size, data.synth
    )
    directory = out_dir or data.scenes_dir
    write_scenes_dir(scenes, directory)
    return SynthgenResult(
        scenes_dir=str(directory),
        n_scenes=len(scenes),
        fire_ids=[scene.fire_id for scene in scenes],
    )
