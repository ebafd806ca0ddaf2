"""
Adam 옵티마이저

bias-corrected Adam. 학습 불가(frozen) 파라미터는 읽지도 쓰지도 않습니다.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from src.nn.module import Parameter
from src.utils.errors import ContractError


@dataclass
class AdamState:
    """파라미터 이름별 1차/2차 모멘트와 스텝 수"""

    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "AdamState":
        return AdamState(
            t=self.t,
            m={k: a.copy() for k, a in self.m.items()},
            v={k: a.copy() for k, a in self.v.items()},
        )


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[np.ndarray | None],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """
    Adam 한 스텝을 제자리(in-place)로 적용합니다.

    Args:
        params: 파라미터 목록 (이름이 부여되어 있어야 함)
        grads: params와 같은 순서의 기울기 (None이면 해당 파라미터 건너뜀)
        state: 모멘트 상태 (처음에는 비어 있음 = 0으로 초기화)
        lr, beta1, beta2, eps: Adam 하이퍼파라미터

    Returns:
        갱신된 state
    """
    if len(params) != len(grads):
        raise ContractError(f"{len(params)} params but {len(grads)} grads")

    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t

    for param, grad in zip(params, grads):
        if not param.trainable or grad is None:
            continue
        key = param.name or str(id(param))
        if grad.shape != param.shape:
            raise ContractError(f"{key}: grad shape {grad.shape} != param shape {param.shape}")

        if key not in state.m:
            state.m[key] = np.zeros(param.shape, dtype=param.dtype)
            state.v[key] = np.zeros(param.shape, dtype=param.dtype)
        m, v = state.m[key], state.v[key]
        if m.shape != param.shape or v.shape != param.shape:
            raise ContractError(f"{key}: optimizer state shape {m.shape} != {param.shape}")

        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * (grad * grad)

        update = (lr / bc1) * m / (np.sqrt(v / bc2) + eps)
        param.data -= update.astype(param.dtype, copy=False)

    return state


class Adam:
    """이름 붙은 파라미터 목록에 대한 Adam (β1=0.9, β2=0.999, eps=1e-8 기본값)"""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState()

    def step(self) -> None:
        adam_step(
            self.params,
            [p.grad for p in self.params],
            self.state,
            self.lr,
            self.beta1,
            self.beta2,
            self.eps,
        )

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
