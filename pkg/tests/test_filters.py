"""QA 필터와 패치 분할"""

import numpy as np
import pytest

from src.data.filters import qa_filter
from src.data.patches import make_patches
from src.models.schemas import QaFractions, QaThresholds
from src.utils.errors import DataError

from .conftest import make_scene


def qa(cloud=0.0, snow=0.0, missing=0.0):
    return QaFractions(cloud_frac=cloud, snow_frac=snow, missing_frac=missing)


def test_thresholds_are_inclusive_for_fractions():
    scene = make_scene(qa=qa(cloud=0.20, snow=0.20, missing=0.20))
    assert qa_filter(scene).accepted


@pytest.mark.parametrize(
    "fractions, reason",
    [
        (qa(cloud=0.21), "cloud"),
        (qa(snow=0.5), "snow"),
        (qa(missing=0.2001), "missing"),
        (qa(cloud=0.9, snow=0.9, missing=0.9), "cloud"),
        (qa(snow=0.3, missing=0.3), "snow"),
    ],
)
def test_first_violation_is_reported(fractions, reason):
    decision = qa_filter(make_scene(qa=fractions))
    assert not decision.accepted
    assert decision.reason == reason


def test_area_must_exceed_minimum():
    assert qa_filter(make_scene(area_ha=100.0)).reason == "area"
    assert qa_filter(make_scene(area_ha=100.01)).accepted
    assert qa_filter(make_scene(area_ha=5.0), QaThresholds(min_area_ha=1.0)).accepted


def test_loosening_thresholds_never_rejects_more():
    rng = np.random.default_rng(0)
    scenes = [
        make_scene(
            fire_id=f"F{i:03d}",
            qa=qa(*rng.uniform(0.0, 0.4, size=3)),
            area_ha=float(rng.uniform(10.0, 300.0)),
        )
        for i in range(60)
    ]
    strict = QaThresholds(cloud=0.1, snow=0.1, missing=0.1, min_area_ha=150.0)
    loose = QaThresholds(cloud=0.3, snow=0.3, missing=0.3, min_area_ha=50.0)
    kept_strict = {s.fire_id for s in scenes if qa_filter(s, strict).accepted}
    kept_loose = {s.fire_id for s in scenes if qa_filter(s, loose).accepted}
    assert kept_strict <= kept_loose
    assert len(kept_loose) > len(kept_strict)


# ============================================================
# 패치 분할
# ============================================================


def test_exact_scene_gives_one_patch():
    patches = make_patches(make_scene(size=128), 128)
    assert len(patches) == 1
    assert patches[0].origin == (0, 0)


def test_divisible_scene_tiles_without_overlap():
    scene = make_scene(size=256)
    patches = make_patches(scene, 128)
    assert [p.origin for p in patches] == [(0, 0), (0, 128), (128, 0), (128, 128)]
    assert sum(int(p.mask.sum()) for p in patches) == int(scene.mask.sum())


def test_remainder_adds_flush_edge_patch():
    scene = make_scene(size=160)
    patches = make_patches(scene, 128)
    assert {p.origin for p in patches} == {(0, 0), (0, 32), (32, 0), (32, 32)}
    last = patches[-1]
    assert last.pre.shape == (3, 128, 128)
    assert np.array_equal(last.post, scene.post[:, 32:, 32:])
    assert np.array_equal(last.mask, scene.mask[32:, 32:])


def test_strided_patches():
    patches = make_patches(make_scene(size=64), 32, stride=16)
    assert len(patches) == 9
    assert all(p.fire_id == "F0001" for p in patches)


def test_scene_smaller_than_patch():
    with pytest.raises(DataError):
        make_patches(make_scene(size=64), 128)
