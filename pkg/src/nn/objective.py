"""
손실 함수 / 평가 지표

클래스 가중 cross-entropy (burned:unburned = 3:1 기본), 혼동 행렬, IoU / F1.
"""

from typing import Iterable, Literal

import numpy as np

from src.models.schemas import ClassWeights, ConfusionCounts
from src.nn import tensor as T
from src.utils.errors import DataError, DimensionError

# 발표된 (IoU, F1) 쌍 (%), 백본 × 전략 9개
REFERENCE_PAIRS: list[tuple[float, float]] = [
    (70.52, 82.71),
    (73.39, 84.65),
    (75.59, 86.10),
    (71.77, 83.56),
    (74.72, 85.53),
    (75.79, 86.23),
    (69.43, 81.96),
    (71.98, 83.71),
    (78.78, 88.13),
]


def _check_target(target: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    target = np.asarray(target)
    if target.shape != shape:
        raise DimensionError(f"target shape {target.shape} != {shape}")
    if not np.isin(target, (0, 1)).all():
        bad = np.unique(target[~np.isin(target, (0, 1))])[:5]
        raise DataError(f"target values must be 0 or 1, found {bad.tolist()}")
    return target.astype(np.int64)


def weighted_ce(
    logits: T.Tensor,
    target: np.ndarray,
    weights: ClassWeights | None = None,
    reduction: Literal["mean", "sum"] = "mean",
) -> T.Tensor:
    """
    클래스 가중 cross-entropy

    Args:
        logits: [2×H×W] (채널 1 = burned)
        target: {0,1}^{H×W}
        weights: 클래스 가중치 (기본 3:1)
        reduction: "mean"은 픽셀 수로 나눔, "sum"은 합

    Returns:
        스칼라 손실 텐서
    """
    weights = weights or ClassWeights()
    if logits.ndim != 3 or logits.shape[0] != 2:
        raise DimensionError(f"logits must be [2×H×W], got {logits.shape}")
    y = _check_target(target, logits.shape[1:])

    onehot = np.stack([y == 0, y == 1]).astype(logits.dtype)
    pixel_w = np.where(y == 1, weights.w_burn, weights.w_unburn).astype(logits.dtype)
    picked = T.log_softmax(logits, axis=0) * T.Tensor(onehot * pixel_w[None])
    loss = -T.tensor_sum(picked)
    if reduction == "mean":
        loss = loss * (1.0 / y.size)
    return loss


def confusion(pred: np.ndarray, target: np.ndarray) -> ConfusionCounts:
    """burned(1)을 양성으로 하는 혼동 행렬"""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise DimensionError(f"pred shape {pred.shape} != target shape {target.shape}")
    p = pred.astype(bool)
    t = target.astype(bool)
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & t)),
        fp=int(np.count_nonzero(p & ~t)),
        fn=int(np.count_nonzero(~p & t)),
        tn=int(np.count_nonzero(~p & ~t)),
    )


def iou(counts: ConfusionCounts) -> float:
    """tp / (tp+fp+fn), 양성이 전혀 없으면 1.0"""
    denom = counts.tp + counts.fp + counts.fn
    return 1.0 if denom == 0 else counts.tp / denom


def f1(counts: ConfusionCounts) -> float:
    """2tp / (2tp+fp+fn), 양성이 전혀 없으면 1.0"""
    denom = 2 * counts.tp + counts.fp + counts.fn
    return 1.0 if denom == 0 else 2 * counts.tp / denom


def f1_from_iou(value: float) -> float:
    return 2.0 * value / (1.0 + value)


def sum_counts(counts: Iterable[ConfusionCounts]) -> ConfusionCounts:
    """micro 집계"""
    total = ConfusionCounts()
    for c in counts:
        total = total + c
    return total
