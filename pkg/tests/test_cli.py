"""명령행: 종료 코드, 오류 줄, 전체 파이프라인"""

import json
from pathlib import Path

import numpy as np
import pytest

from src.cli import (
    EXIT_CHECKPOINT,
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_DIVERGED,
    EXIT_INTERNAL,
    EXIT_MISSING_FILE,
    EXIT_OK,
    EXIT_USAGE,
    error_line,
    exit_code_for,
    main,
)
from src.utils.errors import (
    CheckpointMismatchError,
    CoverageError,
    FormatError,
    NonFiniteError,
    TrainingDivergedError,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def last_error(err: str) -> dict:
    return json.loads(err.strip().splitlines()[-1])


@pytest.mark.parametrize(
    "exc, code",
    [
        (FileNotFoundError("x"), EXIT_MISSING_FILE),
        (FormatError("bad", offset=3), EXIT_DATA),
        (CheckpointMismatchError("hash"), EXIT_CHECKPOINT),
        (TrainingDivergedError(4, float("nan"), ["F1"]), EXIT_DIVERGED),
        (NonFiniteError("nan"), EXIT_INTERNAL),
        (CoverageError("hole"), EXIT_INTERNAL),
        (RuntimeError("boom"), EXIT_INTERNAL),
    ],
)
def test_exit_code_mapping(exc, code):
    assert exit_code_for(exc) == code
    line = json.loads(error_line(exc))
    assert line["exit_code"] == code
    assert set(line) == {"error", "exit_code", "message"}


def test_diverged_error_line_names_the_batch():
    line = json.loads(error_line(TrainingDivergedError(4, float("nan"), ["F1", "F2"])))
    assert line["error"] == "diverged"
    assert "F1" in line["message"] and "step 4" in line["message"]


def test_usage_errors(capsys):
    code, _, err = run(capsys)
    assert code == EXIT_USAGE
    assert last_error(err)["error"] == "usage"
    assert run(capsys, "params", "--bogus")[0] == EXIT_USAGE
    assert run(capsys, "train", "--strategy", "adapter")[0] == EXIT_USAGE
    assert run(capsys, "eval")[0] == EXIT_USAGE


def test_help_exits_cleanly(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == EXIT_OK
    assert "synthgen" in out


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "params", "-c", str(tmp_path / "none.yaml"))
    assert code == EXIT_MISSING_FILE
    assert last_error(err) == {
        "error": "missing_file",
        "exit_code": EXIT_MISSING_FILE,
        "message": f"config file not found: {tmp_path / 'none.yaml'}",
    }


def test_invalid_override(capsys):
    code, _, err = run(capsys, "params", "--set", "lora.rank=0")
    assert code == EXIT_CONFIG
    assert "lora.rank" in last_error(err)["message"]


def test_corrupt_scene_is_a_data_error(capsys, tmp_path):
    scene = tmp_path / "bad.barc"
    scene.write_bytes(b"not a scene")
    code, _, err = run(capsys, "infer", str(scene), "--checkpoint", str(tmp_path / "c.bckp"))
    assert code == EXIT_DATA
    assert last_error(err)["error"] == "format"


def test_params_reproduces_adapter_count(capsys):
    code, out, _ = run(capsys, "params", "-c", str(CONFIGS / "vit_b_lora.yaml"))
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("encoder_only: total 86136576 trainable 442368")
    assert "lora: per block 36,864 x 12 blocks, stem 0, total 442,368" in lines

    code, out, _ = run(capsys, "params", "-c", str(CONFIGS / "vit_l_lora_mlp.yaml"), "--json")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["reports"][0]["trainable"] == 3_145_728
    assert payload["lora"]["total"] == 3_145_728


def test_pipeline_end_to_end(capsys, run_config_file, tmp_path):
    config = run_config_file()

    code, out, _ = run(capsys, "synthgen", "-c", config)
    assert code == EXIT_OK
    fire_ids = json.loads(out)["fire_ids"]
    assert len(fire_ids) == 6

    code, out, _ = run(capsys, "split", "-c", config)
    assert code == EXIT_OK
    assert json.loads(out)["n_train"] == 6

    code, out, _ = run(capsys, "train", "-c", config, "--strategy", "lora")
    assert code == EXIT_OK
    trained = json.loads(out)
    assert trained["steps"] == 2
    assert Path(trained["adapters_path"]).is_file()
    checkpoint = trained["checkpoint_path"]
    assert Path(trained["last_checkpoint_path"]).name == "last.bckp"

    code, out, _ = run(
        capsys, "eval", "-c", config, "--partition", "all", "--checkpoint", checkpoint
    )
    assert code == EXIT_OK
    by_checkpoint = json.loads(out)
    assert by_checkpoint["strategy"] == "lora"
    assert by_checkpoint["n_scenes"] == 6
    assert 0.0 <= by_checkpoint["iou"] <= 1.0

    predictions = tmp_path / "predictions"
    for fire_id in fire_ids:
        scene = str(tmp_path / "scenes" / f"{fire_id}.barc")
        code, out, _ = run(
            capsys, "infer", "-c", config, scene, "--checkpoint", checkpoint,
            "--out", str(predictions),
        )
        assert code == EXIT_OK
        inferred = json.loads(out)
        assert inferred["windows"] == 1
        assert Path(inferred["error_map_path"]).is_file()
    mask = np.load(predictions / f"{fire_ids[0]}.npy")
    assert mask.shape == (32, 32) and mask.dtype == np.uint8

    code, out, _ = run(
        capsys, "eval", "-c", config, "--partition", "all", "--predictions", str(predictions)
    )
    assert code == EXIT_OK
    assert json.loads(out)["counts"] == by_checkpoint["counts"]

    code, out, _ = run(
        capsys, "train", "-c", config, "--resume", trained["last_checkpoint_path"],
        "--set", "train.max_steps=3",
    )
    assert code == EXIT_OK
    resumed = json.loads(out)
    assert resumed["steps"] == 3
    assert resumed["best_val_iou"] >= trained["best_val_iou"]

    code, _, err = run(
        capsys, "eval", "-c", config, "--partition", "all", "--checkpoint", checkpoint,
        "--set", "lora.rank=4",
    )
    assert code == EXIT_CHECKPOINT
    assert last_error(err)["error"] == "checkpoint_mismatch"

    code, _, _ = run(
        capsys, "eval", "-c", config, "--partition", "test", "--checkpoint", checkpoint
    )
    assert code == EXIT_DATA
