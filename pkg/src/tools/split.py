"""
split Tool

QA 필터 + 시공간 분할 매니페스트 생성
"""

from typing import Optional

from pydantic import Field

from src.data.raster_io import read_scenes_dir
from src.data.splits import build_manifest, write_manifest
from src.models.schemas import SplitResult
from src.utils.config import load_run_config


def split(
    config_path: Optional[str] = Field(
        default=None,
        description="실행 설정 YAML 경로",
    ),
    overrides: Optional[list[str]] = Field(
        default=None,
        description="설정 덮어쓰기 (예: data.split.mode=temporal)",
    ),
    scenes_dir: Optional[str] = Field(
        default=None,
        description="BARC1 장면 디렉터리 (기본값: data.scenes_dir)",
    ),
    manifest_path: Optional[str] = Field(
        default=None,
        description="매니페스트 출력 경로 (기본값: data.manifest_path)",
    ),
) -> SplitResult:
    """
    장면을 QA 필터로 거른 뒤 train / test로 나눈 매니페스트를 씁니다.

    Args:
        config_path: 실행 설정 경로
        overrides: 설정 덮어쓰기
        scenes_dir: 장면 디렉터리
        manifest_path: 출력 경로

    Returns:
        SplitResult: 분할별 화재 수
    """
    config = load_run_config(config_path, overrides or [])
    scenes = read_scenes_dir(scenes_dir or config.data.scenes_dir)
    manifest = build_manifest(scenes, config.data.split, config.data.qa)
    path = manifest_path or config.data.manifest_path
    write_manifest(manifest, path)
    return SplitResult(
        manifest_path=str(path),
        mode=manifest.mode,
        n_train=len(manifest.fire_ids("train")),
        n_test=len(manifest.fire_ids("test")),
        n_rejected=len(manifest.fire_ids("rejected")),
    )
