"""시공간 분할과 매니페스트"""

from dataclasses import dataclass

import pytest
from pydantic import ValidationError

from src.data.splits import (
    build_manifest,
    build_split,
    is_target,
    read_manifest,
    select,
    write_manifest,
)
from src.models.schemas import QaFractions, SplitSpec
from src.utils.errors import DataError, FormatError

from .conftest import make_scene


@dataclass
class Fire:
    fire_id: str
    year: int
    biome: str


@pytest.mark.parametrize(
    "year, biome, mode, expected",
    [
        (2019, "Temperate Conifer", "combined", False),
        (2022, "Temperate Conifer", "combined", True),
        (2018, "Tundra", "combined", True),
        (2023, "Boreal Forests/Taiga", "combined", True),
        (2018, "Tundra", "temporal", False),
        (2021, "Tundra", "temporal", True),
        (2022, "Temperate Conifer", "biome", False),
        (2017, "Boreal Forests/Taiga", "biome", True),
    ],
)
def test_is_target(year, biome, mode, expected):
    assert is_target(Fire("F1", year, biome), SplitSpec(mode=mode)) is expected


def test_split_is_a_sorted_partition():
    records = [
        Fire("F09", 2022, "Tundra"),
        Fire("F03", 2018, "Temperate Conifer"),
        Fire("F01", 2020, "Deserts & Xeric Shrublands"),
        Fire("F07", 2019, "Tundra"),
        Fire("F05", 2021, "Temperate Conifer"),
    ]
    train, test = build_split(records, SplitSpec())
    assert [r.fire_id for r in train] == ["F01", "F03"]
    assert [r.fire_id for r in test] == ["F05", "F07", "F09"]
    assert {r.fire_id for r in train} | {r.fire_id for r in test} == {r.fire_id for r in records}


def test_unknown_biome_names_known_labels():
    with pytest.raises(DataError, match="Tundra"):
        is_target(Fire("F1", 2019, "Atlantis"), SplitSpec())


def test_overlapping_years_are_rejected():
    with pytest.raises(ValidationError):
        SplitSpec(source_years=[2019, 2020], target_years=[2020, 2021])


def test_manifest_records_rejections_and_round_trips(tmp_path):
    scenes = [
        make_scene("F3", year=2022),
        make_scene("F1", year=2018),
        make_scene("F2", year=2018, qa=QaFractions(snow_frac=0.5)),
        make_scene("F4", year=2019, area_ha=20.0),
    ]
    manifest = build_manifest(scenes, SplitSpec())
    assert [(e.fire_id, e.partition, e.reason) for e in manifest.entries] == [
        ("F1", "train", None),
        ("F2", "rejected", "snow"),
        ("F3", "test", None),
        ("F4", "rejected", "area"),
    ]

    path = tmp_path / "nested" / "split.json"
    write_manifest(manifest, path)
    loaded = read_manifest(path)
    assert loaded == manifest
    assert [s.fire_id for s in select(scenes, loaded, "test")] == ["F3"]
    assert select(scenes, loaded, "train")[0].fire_id == "F1"


def test_read_manifest_rejects_garbage(tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json", encoding="utf-8")
    with pytest.raises(FormatError):
        read_manifest(bad_json)

    wrong_shape = tmp_path / "wrong.json"
    wrong_shape.write_text('{"entries": 3}', encoding="utf-8")
    with pytest.raises(FormatError):
        read_manifest(wrong_shape)
