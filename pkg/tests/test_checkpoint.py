"""체크포인트 / 어댑터 파일"""

import numpy as np
import pytest

from src.models.schemas import LoraSpec, Strategy, TrainProgress
from src.nn.optim import AdamState
from src.services.assembly import build_model
from src.services.checkpoint import (
    checkpoint_bytes,
    load_adapters,
    load_checkpoint,
    read_checkpoint_header,
    save_adapters,
    save_checkpoint,
)
from src.utils.errors import CheckpointMismatchError, FormatError


def perturb_adapters(model, value=0.5):
    for name, p in model.named_parameters():
        if ".adapter." in name:
            p.data = np.full(p.shape, value)


@pytest.fixture
def saved(lora_model, tmp_path):
    perturb_adapters(lora_model)
    state = AdamState(t=3, m={"head.conv.bias": np.ones(2)}, v={"head.conv.bias": np.full(2, 2.0)})
    path = save_checkpoint(tmp_path / "run" / "model.bckp", lora_model, state, 7, 0.8)
    return path


def test_load_restores_identical_predictions(lora_model, model_config, lora_spec, saved, scene):
    fresh = build_model(model_config, Strategy.LORA, lora_spec, seed=123)
    header, state = load_checkpoint(saved, fresh)
    assert (header.step, header.best_val_iou, header.strategy) == (7, 0.8, Strategy.LORA)
    assert state.t == 3
    assert np.array_equal(state.v["head.conv.bias"], [2.0, 2.0])
    expected = lora_model.predict_logits(scene.pre, scene.post)
    assert np.array_equal(fresh.predict_logits(scene.pre, scene.post), expected)


def test_rewriting_a_loaded_checkpoint_is_byte_identical(
    lora_model, model_config, lora_spec, tmp_path
):
    perturb_adapters(lora_model, 0.25)
    state = AdamState(t=5, m={"head.conv.bias": np.ones(2)}, v={"head.conv.bias": np.ones(2)})
    progress = TrainProgress(epoch=2, batch_offset=4, best_step=3, stale=1)
    path = save_checkpoint(tmp_path / "last.bckp", lora_model, state, 5, 0.625, progress)

    fresh = build_model(model_config, Strategy.LORA, lora_spec, seed=77)
    header, loaded = load_checkpoint(path, fresh)
    assert header.progress == progress
    again = checkpoint_bytes(fresh, loaded, header.step, header.best_val_iou, header.progress)
    assert again == path.read_bytes()


def test_header_lists_trainable_parameters(saved, lora_model):
    header = read_checkpoint_header(saved)
    assert header.param_names == [n for n, _ in lora_model.named_parameters()]
    assert all(".adapter." in n or not n.startswith("encoder.") for n in header.trainable)


def test_mismatched_config_is_refused(model_config, saved):
    other = build_model(model_config, Strategy.LORA, LoraSpec(rank=2, alpha=2.0), seed=0)
    with pytest.raises(CheckpointMismatchError):
        load_checkpoint(saved, other)
    header, _ = load_checkpoint(saved, other, force=True)
    assert header.step == 7


def test_structural_mismatch_fails_even_when_forced(model_config, saved):
    frozen = build_model(model_config, Strategy.DECODER_ONLY, seed=0)
    with pytest.raises(CheckpointMismatchError):
        load_checkpoint(saved, frozen)
    with pytest.raises(CheckpointMismatchError):
        load_checkpoint(saved, frozen, force=True)


def test_corrupt_files(tmp_path, lora_model, saved):
    broken = tmp_path / "broken.bckp"
    broken.write_bytes(b"BCKP1\n{}\n")
    with pytest.raises(FormatError):
        load_checkpoint(broken, lora_model)

    truncated = tmp_path / "truncated.bckp"
    truncated.write_bytes(saved.read_bytes()[:-4])
    with pytest.raises(FormatError):
        read_checkpoint_header(truncated)

    with pytest.raises(FileNotFoundError):
        read_checkpoint_header(tmp_path / "nope.bckp")


def test_adapter_files_swap_regions(lora_model, model_config, lora_spec, tmp_path, scene):
    perturb_adapters(lora_model, 0.25)
    path = save_adapters(tmp_path / "region.badp", lora_model)
    target = build_model(model_config, Strategy.LORA, lora_spec, seed=7)
    load_adapters(path, target)
    expected = lora_model.predict_logits(scene.pre, scene.post)
    assert np.array_equal(target.predict_logits(scene.pre, scene.post), expected)

    with pytest.raises(FormatError):
        load_checkpoint(path, target)
    full = save_checkpoint(tmp_path / "full.bckp", target)
    with pytest.raises(FormatError):
        load_adapters(full, target)
