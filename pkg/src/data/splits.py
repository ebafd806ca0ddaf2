"""
시공간 분할

target 연도 (2021–2023) 또는 target biome (Boreal/Taiga, Tundra) 화재를 test로,
나머지를 train으로 나눕니다. 결과는 fire_id 순으로 정렬됩니다.
"""

import json
import logging
from pathlib import Path
from typing import Protocol, Sequence, TypeVar

from pydantic import ValidationError

from src.data.filters import qa_filter
from src.data.scene import RasterScene
from src.models.schemas import ManifestEntry, QaThresholds, SplitManifest, SplitSpec
from src.utils.errors import DataError, FormatError

logger = logging.getLogger(__name__)


class FireRecord(Protocol):
    fire_id: str
    year: int
    biome: str


R = TypeVar("R", bound=FireRecord)


def is_target(record: FireRecord, spec: SplitSpec) -> bool:
    """record가 test (target domain)에 속하는지"""
    if record.biome not in spec.biome_vocabulary:
        raise DataError(
            f"{record.fire_id}: unknown biome {record.biome!r}; "
            f"known labels: {', '.join(spec.biome_vocabulary)}"
        )
    by_year = record.year in spec.target_years
    by_biome = record.biome in spec.target_biomes
    if spec.mode == "temporal":
        return by_year
    if spec.mode == "biome":
        return by_biome
    return by_year or by_biome


def build_split(records: Sequence[R], spec: SplitSpec) -> tuple[list[R], list[R]]:
    """
    (train, test) 분할

    Args:
        records: fire_id / year / biome을 가진 장면 (QA 통과분)
        spec: 분할 규칙

    Returns:
        (train, test), 각각 fire_id 순
    """
    train, test = [], []
    for record in sorted(records, key=lambda r: r.fire_id):
        (test if is_target(record, spec) else train).append(record)
    return train, test


def build_manifest(
    scenes: Sequence[RasterScene],
    spec: SplitSpec,
    thresholds: QaThresholds | None = None,
) -> SplitManifest:
    """QA 필터 후 분할하여 매니페스트를 만듭니다. 탈락 장면은 사유와 함께 rejected로 기록."""
    accepted = []
    entries: dict[str, ManifestEntry] = {}
    for scene in scenes:
        decision = qa_filter(scene, thresholds)
        if decision.accepted:
            accepted.append(scene)
        else:
            entries[scene.fire_id] = ManifestEntry(
                fire_id=scene.fire_id,
                partition="rejected",
                year=scene.year,
                biome=scene.biome,
                reason=decision.reason,
            )

    train, test = build_split(accepted, spec)
    for partition, members in (("train", train), ("test", test)):
        for scene in members:
            entries[scene.fire_id] = ManifestEntry(
                fire_id=scene.fire_id, partition=partition, year=scene.year, biome=scene.biome
            )
    manifest = SplitManifest(mode=spec.mode, entries=[entries[k] for k in sorted(entries)])
    logger.info(
        "Split (%s): train=%d test=%d rejected=%d",
        spec.mode,
        len(train),
        len(test),
        len(entries) - len(train) - len(test),
    )
    return manifest


def write_manifest(manifest: SplitManifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")


def read_manifest(path: str | Path) -> SplitManifest:
    path = Path(path)
    try:
        return SplitManifest.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest {path} is not valid JSON: {exc.msg}", offset=exc.pos) from exc
    except ValidationError as exc:
        raise FormatError(f"manifest {path} does not match the schema: {exc}") from exc


def select(scenes: Sequence[RasterScene], manifest: SplitManifest, partition: str) -> list:
    """매니페스트의 partition에 속하는 장면만 fire_id 순으로"""
    wanted = set(manifest.fire_ids(partition))
    return sorted((s for s in scenes if s.fire_id in wanted), key=lambda s: s.fire_id)
