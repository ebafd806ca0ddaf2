"""공용 fixture: 작은 모델 구성과 시드 고정 장면"""

import numpy as np
import pytest
import yaml

from src.data.scene import RasterScene
from src.models.schemas import (
    HeadConfig,
    LoraSpec,
    ModelConfig,
    QaFractions,
    RunConfig,
    ScarParams,
    Strategy,
    ViTConfig,
)
from src.services.assembly import build_model


def tiny_model_config(dtype: str = "float64", img_size: int = 16) -> ModelConfig:
    return ModelConfig(
        vit=ViTConfig(
            img_size=img_size, patch=4, d_model=16, depth=2, heads=2, mlp_ratio=2, dtype=dtype
        ),
        head=HeadConfig(c_neck=4, c_dec=4, pool_scales=[1, 2]),
    )


def make_scene(
    fire_id: str = "F0001",
    size: int = 16,
    year: int = 2018,
    biome: str = "Temperate Conifer",
    seed: int = 0,
    area_ha: float = 500.0,
    qa: QaFractions | None = None,
) -> RasterScene:
    rng = np.random.default_rng(seed)
    pre = rng.uniform(0.05, 0.35, size=(3, size, size)).astype(np.float32)
    mask = np.zeros((size, size), dtype=np.uint8)
    mask[size // 4 : size // 2, size // 4 : 3 * size // 4] = 1
    post = np.clip(pre + np.array([0.03, -0.15, 0.12])[:, None, None] * mask, 0, 1)
    return RasterScene(
        fire_id=fire_id,
        year=year,
        biome=biome,
        pre=pre,
        post=post.astype(np.float32),
        mask=mask,
        area_ha=area_ha,
        qa=qa or QaFractions(),
    )


@pytest.fixture
def model_config() -> ModelConfig:
    return tiny_model_config()


@pytest.fixture
def lora_spec() -> LoraSpec:
    return LoraSpec(rank=2, alpha=1.0, targets=["qkv_fused", "attn_out"])


@pytest.fixture
def lora_model(model_config, lora_spec):
    return build_model(model_config, Strategy.LORA, lora_spec, seed=7)


@pytest.fixture
def scene() -> RasterScene:
    return make_scene()


@pytest.fixture
def run_config_file(tmp_path):
    """tmp_path 아래 데이터 / 출력 경로를 가리키는 작은 실행 설정 YAML"""

    def write(**sections) -> str:
        config = RunConfig(
            model=tiny_model_config("float32", img_size=32),
            lora=LoraSpec(rank=2),
            output_dir=str(tmp_path / "runs"),
        )
        raw = config.model_dump(mode="json")
        raw["data"].update(
            scenes_dir=str(tmp_path / "scenes"),
            manifest_path=str(tmp_path / "split.json"),
            n_scenes=6,
            scene_size=32,
            patch_size=32,
            patch_stride=32,
            synth=ScarParams(
                radius_min=4,
                radius_max=10,
                years=[2018],
                biomes=["Temperate Conifer"],
                qa_max=0.1,
                area_ha_range=[200.0, 5000.0],
            ).model_dump(),
        )
        raw["train"].update(max_steps=2, eval_every=1, batch_size=2, lr=1e-3)
        raw["infer"].update(window=32, stride=16)
        for section, values in sections.items():
            raw[section].update(values)
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump(raw), encoding="utf-8")
        return str(path)

    return write
