"""LoRA 어댑터: 부착, 0 초기화 동치, 병합, 파라미터 수"""

import warnings

import numpy as np
import pytest

from src.models.schemas import LoraSpec, ModelConfig, Strategy, ViTConfig
from src.nn import tensor as T
from src.nn.backbone import VisionTransformer, encode
from src.nn.layers import Linear
from src.nn.lora import (
    LoraRankWarning,
    attach,
    attach_all,
    count_lora_params,
    export_adapters,
    forward_adapted,
    import_adapters,
    merge_dense,
)
from src.nn.rng import Rng
from src.services.assembly import build_model, param_report
from src.utils.errors import ConfigurationError, DimensionError

ALL_ROLES = ["qkv_fused", "attn_out", "mlp_fc1", "mlp_fc2", "patch_embed_1x1"]


def linear(d_in, d_out, seed=0, dtype=np.float64, role="attn_out"):
    return Linear(d_in, d_out, Rng(seed), role=role, scale=0.5, dtype=dtype)


def test_attach_zero_init_is_identity_and_freezes_base():
    layer = linear(6, 4)
    x = T.Tensor(np.random.default_rng(0).normal(size=(5, 6)))
    before = layer(x).data.copy()
    adapter = attach(layer, LoraSpec(rank=2, targets=["attn_out"]), "attn_out", Rng(1))
    assert np.array_equal(layer(x).data, before)
    assert not layer.weight.trainable and not layer.bias.trainable
    assert adapter.lora_A.trainable and adapter.lora_B.trainable
    assert np.count_nonzero(adapter.lora_A.data) == adapter.lora_A.size
    assert np.array_equal(adapter.lora_B.data, np.zeros((4, 2)))


def test_a_init_scale_follows_fan_in():
    layer = linear(400, 16)
    adapter = attach(layer, LoraSpec(rank=8, targets=["attn_out"]), "attn_out", Rng(3))
    assert adapter.lora_A.data.std() == pytest.approx(1.0 / 20.0, rel=0.1)


def test_adapter_param_count_formula():
    spec = LoraSpec(rank=8, targets=["attn_out", "qkv_fused"])
    a = attach(linear(768, 768, dtype=np.float32), spec, "attn_out", Rng(0))
    b = attach(linear(768, 2304, dtype=np.float32, role="qkv_fused"), spec, "qkv_fused", Rng(0))
    assert a.num_params == 12_288
    assert b.num_params == 24_576

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LoraRankWarning)
        tiny = attach(linear(2, 3), LoraSpec(rank=1, targets=["attn_out"]), "attn_out", Rng(0))
    assert tiny.num_params == 5


def test_rank_zero_is_rejected():
    with pytest.raises(ValueError):
        LoraSpec(rank=0)


def test_high_rank_warns_but_attaches():
    with pytest.warns(LoraRankWarning):
        adapter = attach(linear(3, 3), LoraSpec(rank=3, targets=["attn_out"]), "attn_out", Rng(0))
    assert adapter.rank == 3


def test_attach_rejects_role_outside_targets():
    with pytest.raises(ConfigurationError):
        attach(linear(4, 4), LoraSpec(rank=1, targets=["qkv_fused"]), "attn_out", Rng(0))


@pytest.mark.parametrize("alpha, expected", [(1.0, 14.0), (0.5, 8.0)])
def test_scalar_hand_value(alpha, expected):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LoraRankWarning)
        layer = linear(1, 1)
        spec = LoraSpec(rank=1, alpha=alpha, targets=["attn_out"])
        adapter = attach(layer, spec, "attn_out", Rng(0))
    layer.weight.data = np.array([[2.0]])
    adapter.lora_A.data = np.array([[3.0]])
    adapter.lora_B.data = np.array([[4.0]])
    y = forward_adapted(adapter, T.Tensor(np.array([[1.0]])))
    assert y.data[0, 0] == pytest.approx(expected)


def test_forward_adapted_shape_mismatch():
    adapter = attach(linear(4, 4), LoraSpec(rank=1, targets=["attn_out"]), "attn_out", Rng(0))
    with pytest.raises(DimensionError):
        forward_adapted(adapter, T.Tensor(np.ones((2, 5))))


def test_merge_dense_trivial_cases():
    layer = linear(4, 4)
    adapter = attach(layer, LoraSpec(rank=2, targets=["attn_out"]), "attn_out", Rng(0))
    assert np.array_equal(merge_dense(adapter), layer.weight.data)
    adapter.lora_B.data = np.ones((4, 2))
    adapter.alpha = 0.0
    assert np.array_equal(merge_dense(adapter), layer.weight.data)


def test_merge_equivalence_on_random_configurations():
    rng = np.random.default_rng(11)
    worst = 0.0
    for trial in range(100):
        d_in, d_out = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        rank = int(rng.integers(1, 3))
        alpha = float(rng.uniform(0.0, 2.0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LoraRankWarning)
            layer = linear(d_in, d_out, seed=trial, dtype=np.float32)
            spec = LoraSpec(rank=rank, alpha=alpha, targets=["attn_out"])
            adapter = attach(layer, spec, "attn_out", Rng(trial))
        adapter.lora_B.data = rng.normal(size=(d_out, rank)).astype(np.float32)
        x = rng.normal(size=(3, d_in)).astype(np.float32)
        adapted = forward_adapted(adapter, T.Tensor(x)).data
        merged = x @ merge_dense(adapter).T + layer.bias.data
        worst = max(worst, float(np.abs(adapted - merged).max()))
    assert worst < 1e-5


def test_zero_init_equivalence_on_random_encoders():
    rng = np.random.default_rng(5)
    for trial in range(5):
        config = ViTConfig(img_size=8, patch=4, d_model=8, depth=2, heads=2, mlp_ratio=2)
        base = VisionTransformer(config, Rng(trial))
        adapted = VisionTransformer(config, Rng(trial))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LoraRankWarning)
            attach_all(adapted, LoraSpec(rank=2, targets=ALL_ROLES), Rng(99))
        x = T.Tensor(rng.normal(size=(3, 8, 8)).astype(np.float32))
        for a, b in zip(encode(base, x).tokens, encode(adapted, x).tokens):
            assert np.abs(a.data - b.data).max() <= 1e-6


def test_attach_all_requires_a_match():
    config = ViTConfig(img_size=8, patch=4, d_model=8, depth=1, heads=2)
    encoder = VisionTransformer(config, Rng(0))
    with pytest.raises(ConfigurationError):
        attach_all(encoder, LoraSpec(rank=1, targets=[]), Rng(0))


# ============================================================
# 파라미터 수 재구성
# ============================================================


def _vit(d_model, depth, heads):
    return ViTConfig(img_size=128, patch=16, d_model=d_model, depth=depth, heads=heads)


def test_vit_b_attention_adapters_count():
    config = ModelConfig(vit=_vit(768, 12, 12))
    spec = LoraSpec(rank=8, targets=["qkv_fused", "attn_out"])
    assembly = build_model(config, Strategy.LORA, spec)
    counts = count_lora_params(assembly.encoder)
    assert counts.per_block == [36_864] * 12
    assert counts.stem == 0
    assert counts.total == 442_368
    assert param_report(assembly, "encoder_only").trainable == 442_368


def test_vit_l_attention_and_mlp_adapters_count():
    config = ModelConfig(vit=_vit(1024, 24, 16))
    spec = LoraSpec(rank=8, targets=["qkv_fused", "attn_out", "mlp_fc1", "mlp_fc2"])
    assembly = build_model(config, Strategy.LORA, spec)
    counts = count_lora_params(assembly.encoder)
    assert counts.per_block == [131_072] * 24
    assert counts.total == 3_145_728
    assert param_report(assembly, "encoder_only").trainable == 3_145_728


def test_analytic_count_matches_attached_count():
    encoder = VisionTransformer(_vit(768, 12, 12), Rng(0))
    spec = LoraSpec(rank=8, targets=["qkv_fused", "attn_out", "patch_embed_1x1"])
    analytic = count_lora_params(encoder, spec)
    attach_all(encoder, spec, Rng(1))
    attached = count_lora_params(encoder)
    assert analytic == attached
    assert attached.stem == 8 * (3 * 16 * 16 + 768)
    assert sum(attached.per_block) == 442_368


def test_parameter_accounting_does_not_materialize_weights():
    assembly = build_model(ModelConfig(vit=_vit(1024, 24, 16)), Strategy.LORA, LoraSpec())
    param_report(assembly, "full_network")
    assert not any(p.materialized for p in assembly.parameters())


def test_adapter_export_import_swaps_only_adapters(lora_model, model_config, lora_spec):
    other = build_model(model_config, Strategy.LORA, lora_spec, seed=7)
    for name, p in lora_model.named_parameters():
        if ".adapter." in name:
            p.data = p.data + 0.25
    state = export_adapters(lora_model)
    assert all(".adapter." in name for name in state)
    import_adapters(other, state)
    for (name, a), (_, b) in zip(lora_model.named_parameters(), other.named_parameters()):
        assert np.array_equal(a.data, b.data), name


def test_import_adapters_rejects_mismatched_sets(lora_model):
    state = export_adapters(lora_model)
    state.pop(next(iter(state)))
    with pytest.raises(ConfigurationError):
        import_adapters(lora_model, state)
