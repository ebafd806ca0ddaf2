"""실행 설정 로드와 덮어쓰기"""

from pathlib import Path

import pytest

from src.models.schemas import Strategy
from src.services.assembly import assembly_from_config, param_report
from src.utils.config import CONFIG_ENV, apply_overrides, load_run_config, parse_override
from src.utils.errors import ConfigurationError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize(
    "item, path, value",
    [
        ("train.lr=1e-4", ["train", "lr"], 1e-4),
        ("train.batch_size=4", ["train", "batch_size"], 4),
        ("train.strategy=full_ft", ["train", "strategy"], "full_ft"),
        ("data.split.target_years=[2021, 2022]", ["data", "split", "target_years"], [2021, 2022]),
        ("model.vit.use_cls_token=true", ["model", "vit", "use_cls_token"], True),
        ("train.early_stop_patience=", ["train", "early_stop_patience"], None),
    ],
)
def test_parse_override(item, path, value):
    assert parse_override(item) == (path, value)


@pytest.mark.parametrize(
    "item", ["train.lr", "=3", "train.lr=[1,", "train.lr=inf", "train.lr=nan", "train.lr=.inf"]
)
def test_parse_override_rejects_malformed(item):
    with pytest.raises(ConfigurationError):
        parse_override(item)


def test_apply_overrides_creates_sections():
    raw = apply_overrides({"train": {"lr": 0.1}}, ["train.seed=3", "infer.window=64"])
    assert raw == {"train": {"lr": 0.1, "seed": 3}, "infer": {"window": 64}}
    with pytest.raises(ConfigurationError):
        apply_overrides({"train": {"lr": 0.1}}, ["train.lr.x=1"])


def test_load_with_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("train:\n  lr: 0.01\n  strategy: decoder_only\n", encoding="utf-8")
    config = load_run_config(path, ["train.lr=1e-3", "lora.rank=4"])
    assert config.train.lr == pytest.approx(1e-3)
    assert config.train.strategy is Strategy.DECODER_ONLY
    assert config.lora.rank == 4


def test_unknown_keys_and_bad_values_are_config_errors(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("train:\n  learning_rate: 0.1\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="learning_rate"):
        load_run_config(path)
    with pytest.raises(ConfigurationError):
        load_run_config(None, ["infer.stride=256", "infer.window=128"])
    with pytest.raises(ConfigurationError):
        load_run_config(None, ["lora.targets=[ffn]"])


def test_odd_patch_grid_is_rejected():
    # 48 / 16 = 3x3 격자는 가장 거친 넥 레벨에서 반으로 나눌 수 없음
    with pytest.raises(ConfigurationError, match="must be even"):
        load_run_config(None, ["model.vit.img_size=48", "data.patch_size=48"])
    config = load_run_config(None, ["model.vit.img_size=64", "data.patch_size=64"])
    assert config.model.vit.grid_size == 4


def test_file_problems(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "missing.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("train: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_run_config(broken)
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_run_config(listing)


def test_environment_variable_and_defaults(tmp_path, monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)
    assert load_run_config().train.strategy is Strategy.LORA

    path = tmp_path / "env.yaml"
    path.write_text("output_dir: elsewhere\n", encoding="utf-8")
    monkeypatch.setenv(CONFIG_ENV, str(path))
    assert load_run_config().output_dir == "elsewhere"


def test_shipped_configs_validate():
    names = sorted(p.name for p in CONFIGS.glob("*.yaml"))
    assert names == ["desk.yaml", "vit_b_lora.yaml", "vit_l_lora_mlp.yaml"]
    for name in names:
        load_run_config(CONFIGS / name)


@pytest.mark.parametrize(
    "name, trainable", [("vit_b_lora.yaml", 442_368), ("vit_l_lora_mlp.yaml", 3_145_728)]
)
def test_shipped_configs_reproduce_adapter_counts(name, trainable):
    model = assembly_from_config(load_run_config(CONFIGS / name))
    assert param_report(model, "encoder_only").trainable == trainable
