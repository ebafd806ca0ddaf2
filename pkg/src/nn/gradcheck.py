"""
유한 차분 기울기 검사

reverse-mode 기울기를 중앙 차분 (f(x+h) - f(x-h)) / 2h 와 비교합니다.
"""

from typing import Callable, Sequence

import numpy as np

from src.nn.rng import Rng
from src.nn.tensor import Tensor, no_grad
from src.utils.errors import ContractError

# 상대 오차 분모의 하한. 0에 가까운 기울기에서 반올림 잡음이 오차를 부풀리지 않게 함
DENOMINATOR_FLOOR = 1e-3


def numerical_grad(f: Callable[[], Tensor], param: Tensor, index: int, h: float) -> float:
    coord = np.unravel_index(index, param.shape)
    data = param.data
    original = data[coord]
    with no_grad():
        data[coord] = original + h
        plus = f().item()
        data[coord] = original - h
        minus = f().item()
    data[coord] = original
    return (plus - minus) / (2.0 * h)


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    samples_per_param: int | None = 32,
    seed: int = 0,
) -> float:
    """
    스칼라 함수 f의 기울기를 유한 차분과 비교합니다.

    Args:
        f: 인자 없이 호출되는 스칼라 출력 함수
        params: 검사할 텐서 (float64 필수)
        h: 차분 간격
        samples_per_param: 파라미터당 검사할 좌표 수 (None이면 전부)
        seed: 좌표 샘플링 시드

    Returns:
        샘플 좌표 전체에 대한 최대 상대 오차
    """
    for p in params:
        if p.dtype != np.float64:
            raise ContractError(f"grad_check needs float64 tensors, got {p.dtype}")

    saved_flags = [p.requires_grad for p in params]
    for p in params:
        p.requires_grad = True
        p.grad = None
    try:
        out = f()
        if out.size != 1:
            raise ContractError(f"grad_check needs a scalar function, got shape {out.shape}")
        out.backward()
        analytic = [
            np.zeros(p.shape) if p.grad is None else p.grad.reshape(-1).copy() for p in params
        ]
    finally:
        for p, flag in zip(params, saved_flags):
            p.requires_grad = flag

    rng = Rng(seed)
    worst = 0.0
    for p, grad in zip(params, analytic):
        grad = grad.reshape(-1)
        if samples_per_param is None or p.size <= samples_per_param:
            coords = range(p.size)
        else:
            coords = sorted(rng.choice(p.size, size=samples_per_param, replace=False))
        for index in coords:
            numeric = numerical_grad(f, p, int(index), h)
            denom = max(abs(grad[index]), abs(numeric), DENOMINATOR_FLOOR)
            worst = max(worst, abs(grad[index] - numeric) / denom)
    return worst
