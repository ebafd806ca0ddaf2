"""
BARC1 장면 파일 입출력

헤더 (fire_id, year, biome, area_ha, bands, qa) + pre/post (f32le [3×H×W]) + mask (u8 [H×W]).
"""

import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.data.scene import RasterScene
from src.models.schemas import SceneHeader
from src.utils.container import decode, encode
from src.utils.errors import DataError, DimensionError, FormatError

logger = logging.getLogger(__name__)

MAGIC = b"BARC1"
SUFFIX = ".barc"


def scene_to_bytes(scene: RasterScene) -> bytes:
    header = SceneHeader(
        fire_id=scene.fire_id,
        year=scene.year,
        biome=scene.biome,
        area_ha=scene.area_ha,
        bands=list(scene.bands),
        qa=scene.qa,
    )
    blocks = [
        ("pre", scene.pre.astype(np.float32)),
        ("post", scene.post.astype(np.float32)),
        ("mask", scene.mask.astype(np.uint8)),
    ]
    return encode(MAGIC, header.model_dump(exclude={"magic"}), blocks)


def scene_from_bytes(payload: bytes) -> RasterScene:
    head_fields, arrays = decode(MAGIC, payload)
    header_end = payload.find(b"\n", len(MAGIC) + 1)
    try:
        header = SceneHeader(**head_fields)
    except ValidationError as exc:
        message = exc.errors()[0]["msg"]
        raise FormatError(f"invalid scene header: {message}", offset=len(MAGIC) + 1) from exc

    expected = {"pre": "float32", "post": "float32", "mask": "uint8"}
    for name, dtype in expected.items():
        if name not in arrays:
            raise FormatError(f"missing block {name!r}", offset=header_end + 1)
        if arrays[name].dtype != np.dtype(dtype):
            raise FormatError(f"block {name!r} has dtype {arrays[name].dtype}, want {dtype}")
    try:
        return RasterScene(
            fire_id=header.fire_id,
            year=header.year,
            biome=header.biome,
            pre=arrays["pre"],
            post=arrays["post"],
            mask=arrays["mask"],
            area_ha=header.area_ha,
            qa=header.qa,
            bands=tuple(header.bands),
        )
    except (DataError, DimensionError) as exc:
        raise FormatError(f"inconsistent scene payload: {exc}", offset=header_end + 1) from exc


def write_scene(scene: RasterScene, path: str | Path) -> None:
    Path(path).write_bytes(scene_to_bytes(scene))


def read_scene(path: str | Path) -> RasterScene:
    """
    BARC1 장면 파일을 읽습니다.

    Args:
        path: 파일 경로

    Returns:
        RasterScene (실패하면 FormatError, 부분 결과 없음)
    """
    return scene_from_bytes(Path(path).read_bytes())


def write_scenes_dir(scenes: list[RasterScene], directory: str | Path) -> list[Path]:
    """fire_id.barc 파일로 저장"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for scene in sorted(scenes, key=lambda s: s.fire_id):
        path = directory / f"{scene.fire_id}{SUFFIX}"
        write_scene(scene, path)
        paths.append(path)
    logger.info("Wrote %d scenes to %s", len(paths), directory)
    return paths


def read_scenes_dir(directory: str | Path) -> list[RasterScene]:
    """디렉터리의 모든 장면을 fire_id 순으로 읽습니다."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"scene directory not found: {directory}")
    scenes = [read_scene(path) for path in sorted(directory.glob(f"*{SUFFIX}"))]
    return sorted(scenes, key=lambda s: s.fire_id)
