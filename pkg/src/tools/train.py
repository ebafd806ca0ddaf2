"""
train Tool

매니페스트의 train 화재로 학습하고 최고 검증 IoU 시점 (checkpoint.bckp)과
마지막 스텝 (last.bckp, 재개용)을 체크포인트로 저장
"""

import logging
import shutil
from pathlib import Path
from typing import Optional

from pydantic import Field

from src.data.patches import make_patches
from src.data.raster_io import read_scenes_dir
from src.data.splits import read_manifest, select
from src.models.schemas import Strategy, TrainResult
from src.services.assembly import assembly_from_config, param_report
from src.services.checkpoint import load_checkpoint, save_adapters, save_checkpoint
from src.services.trainer import Trainer, holdout_split
from src.utils.config import load_run_config
from src.utils.errors import ConfigurationError, DataError

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.bckp"
LAST_CHECKPOINT_NAME = "last.bckp"
ADAPTERS_NAME = "adapters.badp"
HISTORY_NAME = "history.jsonl"


def train(
    config_path: Optional[str] = Field(
        default=None,
        description="실행 설정 YAML 경로",
    ),
    overrides: Optional[list[str]] = Field(
        default=None,
        description="설정 덮어쓰기 (예: train.max_steps=200)",
    ),
    strategy: Optional[str] = Field(
        default=None,
        description="적응 전략: full_ft, decoder_only, lora (기본값: train.strategy)",
    ),
    out_dir: Optional[str] = Field(
        default=None,
        description="산출물 디렉터리 (기본값: output_dir/<strategy>)",
    ),
    resume: Optional[str] = Field(
        default=None,
        description="이어서 학습할 체크포인트 경로 (보통 last.bckp)",
    ),
    force: bool = Field(
        default=False,
        description="resume 체크포인트의 config hash가 달라도 적재",
    ),
) -> TrainResult:
    """
    모델을 학습합니다.

    Args:
        config_path: 실행 설정 경로
        overrides: 설정 덮어쓰기
        strategy: 적응 전략
        out_dir: 산출물 디렉터리
        resume: 재개할 체크포인트
        force: hash 불일치 무시

    Returns:
        TrainResult: 체크포인트 / 기록 경로와 최고 검증 IoU
    """
    config = load_run_config(config_path, overrides or [])
    strategy = Strategy(strategy) if strategy else config.train.strategy
    if config.data.patch_size != config.model.vit.img_size:
        raise ConfigurationError(
            f"data.patch_size {config.data.patch_size} must equal "
            f"model.vit.img_size {config.model.vit.img_size}"
        )

    scenes = select(
        read_scenes_dir(config.data.scenes_dir),
        read_manifest(config.data.manifest_path),
        "train",
    )
    if not scenes:
        raise DataError(f"manifest {config.data.manifest_path} has no train scenes")
    patches = [
        patch
        for scene in scenes
        for patch in make_patches(scene, config.data.patch_size, config.data.patch_stride)
    ]
    train_patches, val_patches = holdout_split(patches, config.train.val_fraction)

    out = Path(out_dir or Path(config.output_dir) / strategy.value)
    out.mkdir(parents=True, exist_ok=True)
    history_path = out / HISTORY_NAME

    assembly = assembly_from_config(config, strategy)
    trainer = Trainer(assembly, config.train, history_path)
    if resume:
        header, state = load_checkpoint(resume, assembly, force=force)
        trainer.restore(state, header.step, header.best_val_iou, header.progress)
        logger.info(
            "Resuming from %s at step %d (epoch %d, offset %d)",
            resume,
            header.step,
            header.progress.epoch,
            header.progress.batch_offset,
        )
    elif history_path.exists():
        history_path.unlink()

    outcome = trainer.fit(train_patches, val_patches)
    last = save_checkpoint(
        out / LAST_CHECKPOINT_NAME,
        assembly,
        trainer.adam_state,
        trainer.step_count,
        trainer.best_val_iou,
        trainer.progress,
    )

    checkpoint = out / CHECKPOINT_NAME
    adapters = out / ADAPTERS_NAME if strategy is Strategy.LORA else None
    if outcome.best_state is not None:
        assembly.load_state_dict(outcome.best_state)
        save_checkpoint(
            checkpoint,
            assembly,
            outcome.best_adam,
            outcome.best_step,
            outcome.best_val_iou,
            outcome.best_progress,
        )
        if adapters is not None:
            save_adapters(adapters, assembly)
    elif checkpoint.exists():
        logger.info("No improvement over best val IoU; keeping %s", checkpoint)
    else:
        logger.warning("No improvement since resume and no best checkpoint in %s", out)
        shutil.copyfile(last, checkpoint)
        if adapters is not None:
            save_adapters(adapters, assembly)

    return TrainResult(
        checkpoint_path=str(checkpoint),
        last_checkpoint_path=str(last),
        history_path=str(history_path),
        adapters_path=str(adapters) if adapters else None,
        strategy=strategy.value,
        steps=outcome.steps,
        best_val_iou=outcome.best_val_iou,
        final_loss=outcome.final_loss,
        params=[param_report(assembly, "encoder_only"), param_report(assembly, "full_network")],
    )
