"""
학습 루프

mini-batch Adam + 클래스 가중 cross-entropy, eval_every 스텝마다 검증 IoU (micro)를 계산해
가장 높은 시점의 가중치를 보관합니다.
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from src.data.scene import Patch
from src.models.schemas import HistoryEntry, TrainConfig, TrainProgress
from src.nn.objective import confusion, iou, sum_counts, weighted_ce
from src.nn.optim import Adam, AdamState
from src.nn.rng import Rng
from src.services.assembly import ModelAssembly
from src.utils.errors import DataError, NonFiniteError, TrainingDivergedError

logger = logging.getLogger(__name__)


def holdout_split(
    patches: Sequence[Patch], fraction: float = 0.1
) -> tuple[list[Patch], list[Patch]]:
    """
    fire_id 해시로 검증용 화재를 떼어냅니다 (같은 화재의 패치는 한쪽에만).

    Returns:
        (train, val)
    """
    train, val = [], []
    for patch in patches:
        digest = hashlib.sha256(patch.fire_id.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:8], "big") / 2**64
        (val if bucket < fraction else train).append(patch)
    if not val and len({p.fire_id for p in train}) > 1:
        # 해시가 한쪽으로 몰린 소규모 데이터: 가장 작은 해시의 화재 하나를 검증용으로
        first = min(
            {p.fire_id for p in train}, key=lambda f: hashlib.sha256(f.encode()).digest()
        )
        val = [p for p in train if p.fire_id == first]
        train = [p for p in train if p.fire_id != first]
    return train, val


def evaluate_patches(assembly: ModelAssembly, patches: Sequence[Patch]) -> float:
    """패치 전체에 대한 micro IoU"""
    counts = []
    for patch in patches:
        logits = assembly.predict_logits(patch.pre, patch.post)
        counts.append(confusion(logits.argmax(axis=0), patch.mask))
    return iou(sum_counts(counts))


@dataclass
class TrainOutcome:
    """
    fit 결과

    best_*는 최고 검증 IoU 시점의 가중치 / Adam 상태 / 재개 위치입니다. 재개한 학습에서
    기존 최고 기록을 넘지 못하면 best_state는 None입니다.
    """

    best_state: dict[str, np.ndarray] | None
    best_step: int
    best_val_iou: float | None
    best_adam: AdamState | None = None
    best_progress: TrainProgress | None = None
    history: list[HistoryEntry] = field(default_factory=list)
    final_loss: float | None = None
    steps: int = 0


class Trainer:
    """
    학습 가능 파라미터만 갱신하는 학습기

    step()은 배치 하나를 처리하므로 체크포인트 재개 / 재현 테스트에 그대로 쓸 수 있습니다.
    epoch 순열에서의 위치를 기억하므로 중단 후 재개해도 같은 배치 순서로 이어집니다.
    """

    def __init__(
        self,
        assembly: ModelAssembly,
        config: TrainConfig,
        history_path: str | Path | None = None,
    ):
        self.assembly = assembly
        self.config = config
        self.optimizer = Adam(assembly.parameters(), lr=config.lr)
        self.step_count = 0
        self.best_val_iou: float | None = None
        self.best_step = 0
        self.stale = 0
        self.epoch = 0
        self.batch_offset = 0
        self.history_path = Path(history_path) if history_path else None

    @property
    def adam_state(self) -> AdamState:
        return self.optimizer.state

    @property
    def progress(self) -> TrainProgress:
        return TrainProgress(
            epoch=self.epoch,
            batch_offset=self.batch_offset,
            best_step=self.best_step,
            stale=self.stale,
        )

    def restore(
        self,
        state: AdamState,
        step: int,
        best_val_iou: float | None = None,
        progress: TrainProgress | None = None,
    ) -> None:
        """체크포인트에서 이어서 학습 (load_checkpoint 결과를 그대로 전달)"""
        progress = progress or TrainProgress(best_step=step)
        self.optimizer.state = state
        self.step_count = step
        self.best_val_iou = best_val_iou
        self.best_step = progress.best_step
        self.stale = progress.stale
        self.epoch = progress.epoch
        self.batch_offset = progress.batch_offset

    def step(self, batch: Sequence[Patch]) -> float:
        """
        배치 하나에 대한 forward / backward / Adam 갱신

        Returns:
            배치 평균 손실
        """
        if not batch:
            raise DataError("empty batch")
        self.optimizer.zero_grad()
        total = 0.0
        try:
            for patch in batch:
                logits, _ = self.assembly(
                    self.assembly.prepare(patch.pre), self.assembly.prepare(patch.post)
                )
                loss = weighted_ce(
                    logits, patch.mask, self.config.weights, self.config.loss_reduction
                ) * (1.0 / len(batch))
                loss.backward()
                total += loss.item()
        except NonFiniteError as exc:
            raise TrainingDivergedError(
                self.step_count + 1, math.nan, [p.fire_id for p in batch]
            ) from exc
        if not math.isfinite(total):
            raise TrainingDivergedError(self.step_count + 1, total, [p.fire_id for p in batch])
        self.optimizer.step()
        self.step_count += 1
        return total

    def _record(self, entry: HistoryEntry, history: list[HistoryEntry]) -> None:
        history.append(entry)
        if self.history_path is not None:
            with self.history_path.open("a", encoding="utf-8") as fh:
                fh.write(entry.model_dump_json() + "\n")

    def _advance(self, n_train: int) -> None:
        self.batch_offset += self.config.batch_size
        if self.batch_offset >= n_train:
            self.epoch += 1
            self.batch_offset = 0

    def fit(self, train: Sequence[Patch], val: Sequence[Patch]) -> TrainOutcome:
        """
        epoch 단위 셔플 + mini-batch 학습

        Args:
            train: 학습 패치
            val: 검증 패치

        Returns:
            TrainOutcome: 최고 검증 IoU 시점의 가중치와 기록
        """
        if not train or not val:
            raise DataError(f"train ({len(train)}) and val ({len(val)}) must be non-empty")
        cfg = self.config
        rng = Rng(cfg.seed)
        history: list[HistoryEntry] = []
        best_state = best_adam = best_progress = None
        loss = None
        max_steps = cfg.max_steps or cfg.max_epochs * math.ceil(len(train) / cfg.batch_size)

        logger.info(
            "Training %s: %d train / %d val patches, batch %d, lr %g, from step %d up to %d",
            self.assembly.strategy.value,
            len(train),
            len(val),
            cfg.batch_size,
            cfg.lr,
            self.step_count,
            max_steps,
        )
        done = self.step_count >= max_steps
        while not done:
            order = rng.derive(self.epoch).permutation(len(train))
            while True:
                start = self.batch_offset
                batch = [train[i] for i in order[start:start + cfg.batch_size]]
                loss = self.step(batch)
                self._advance(len(train))

                val_iou = None
                last = self.step_count >= max_steps
                if self.step_count % cfg.eval_every == 0 or last:
                    val_iou = evaluate_patches(self.assembly, val)
                    if self.best_val_iou is None or val_iou > self.best_val_iou:
                        self.best_val_iou = val_iou
                        self.best_step = self.step_count
                        self.stale = 0
                        best_state = self.assembly.state_dict()
                        best_adam = self.adam_state.copy()
                        best_progress = self.progress
                    else:
                        self.stale += 1
                    logger.info(
                        "step %d | loss %.5f | val IoU %.4f (best %.4f @ %d)",
                        self.step_count,
                        loss,
                        val_iou,
                        self.best_val_iou,
                        self.best_step,
                    )
                elif self.step_count % cfg.log_every == 0:
                    logger.info("step %d | loss %.5f", self.step_count, loss)
                entry = HistoryEntry(step=self.step_count, loss=loss, val_iou=val_iou)
                self._record(entry, history)

                patience = cfg.early_stop_patience
                if last or (patience is not None and self.stale >= patience):
                    done = True
                    break
                if self.batch_offset == 0:
                    break

        logger.info(
            "Finished at step %d, best val IoU %.4f at step %d",
            self.step_count,
            self.best_val_iou if self.best_val_iou is not None else float("nan"),
            self.best_step,
        )
        return TrainOutcome(
            best_state=best_state,
            best_step=self.best_step,
            best_val_iou=self.best_val_iou,
            best_adam=best_adam,
            best_progress=best_progress,
            history=history,
            final_loss=loss,
            steps=self.step_count,
        )
