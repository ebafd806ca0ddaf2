"""
기본 레이어

Linear (LoRA 어댑터 부착 가능), LayerNorm, 1×1 / 3×3 합성곱, 2×2 전치 합성곱.
합성곱 레이어는 모두 단일 샘플 [C×H×W] 입력을 받습니다.
"""

import math
from typing import TYPE_CHECKING, Optional

import numpy as np

from src.nn import tensor as T
from src.nn.module import Module, Parameter
from src.nn.rng import Rng
from src.utils.errors import DimensionError

if TYPE_CHECKING:
    from src.nn.lora import LoraAdapter


class Linear(Module):
    """
    y = x Wᵀ + b (+ 어댑터 출력)

    weight는 [d_out×d_in]. role은 LoRA 대상 역할 이름 (qkv_fused, attn_out 등)입니다.
    """

    def __init__(
        self,
        d_in: int,
        d_out: int,
        rng: Rng,
        role: Optional[str] = None,
        scale: float = 0.02,
        dtype=np.float32,
    ):
        self.d_in = d_in
        self.d_out = d_out
        self.role = role
        self.weight = Parameter((d_out, d_in), rng.child(), scale=scale, dtype=dtype)
        self.bias = Parameter((d_out,), init="zeros", dtype=dtype)
        self.adapter: Optional["LoraAdapter"] = None

    def forward_base(self, x: T.Tensor) -> T.Tensor:
        if x.shape[-1] != self.d_in:
            raise DimensionError(f"linear expects last dim {self.d_in}, got {x.shape}")
        return T.matmul(x, T.permute(self.weight, (1, 0))) + self.bias

    def forward(self, x: T.Tensor) -> T.Tensor:
        y = self.forward_base(x)
        if self.adapter is not None:
            y = y + self.adapter(x)
        return y


class LayerNorm(Module):
    def __init__(self, d: int, eps: float = 1e-6, dtype=np.float32):
        self.eps = eps
        self.gamma = Parameter((d,), init="ones", dtype=dtype)
        self.beta = Parameter((d,), init="zeros", dtype=dtype)

    def forward(self, x: T.Tensor) -> T.Tensor:
        return T.layer_norm(x, self.gamma, self.beta, self.eps)


class Conv1x1(Module):
    """채널 방향 선형 투영 [C×H×W] -> [O×H×W]"""

    def __init__(self, c_in: int, c_out: int, rng: Rng, dtype=np.float32):
        self.c_in = c_in
        self.c_out = c_out
        self.weight = Parameter(
            (c_out, c_in), rng.child(), scale=1.0 / math.sqrt(c_in), dtype=dtype
        )
        self.bias = Parameter((c_out,), init="zeros", dtype=dtype)

    def forward(self, x: T.Tensor) -> T.Tensor:
        c, h, w = x.shape
        if c != self.c_in:
            raise DimensionError(f"conv1x1 expects {self.c_in} channels, got {c}")
        y = T.matmul(self.weight, T.reshape(x, (c, h * w)))
        y = y + T.reshape(self.bias, (self.c_out, 1))
        return T.reshape(y, (self.c_out, h, w))


class Conv3x3(Module):
    """edge 패딩 3×3 합성곱 (출력 크기 = 입력 크기)"""

    def __init__(self, c_in: int, c_out: int, rng: Rng, dtype=np.float32):
        self.weight = Parameter(
            (c_out, c_in, 3, 3), rng.child(), scale=1.0 / math.sqrt(9 * c_in), dtype=dtype
        )
        self.bias = Parameter((c_out,), init="zeros", dtype=dtype)

    def forward(self, x: T.Tensor) -> T.Tensor:
        return T.conv2d(T.pad_edge(x, 1), self.weight, self.bias)


class ConvTranspose2x2(Module):
    """
    kernel 2, stride 2 전치 합성곱 [Ci×H×W] -> [Co×2H×2W]

    겹침이 없으므로 행렬곱 한 번과 재배열로 계산합니다.
    weight는 [Ci×Co×2×2] 배치입니다.
    """

    def __init__(self, c_in: int, c_out: int, rng: Rng, dtype=np.float32):
        self.c_in = c_in
        self.c_out = c_out
        self.weight = Parameter(
            (c_in, c_out, 2, 2), rng.child(), scale=1.0 / math.sqrt(c_in), dtype=dtype
        )
        self.bias = Parameter((c_out,), init="zeros", dtype=dtype)

    def forward(self, x: T.Tensor) -> T.Tensor:
        c, h, w = x.shape
        if c != self.c_in:
            raise DimensionError(f"conv_transpose expects {self.c_in} channels, got {c}")
        wm = T.reshape(T.permute(self.weight, (1, 2, 3, 0)), (self.c_out * 4, c))
        y = T.matmul(wm, T.reshape(x, (c, h * w)))
        y = T.reshape(y, (self.c_out, 2, 2, h, w))
        y = T.permute(y, (0, 3, 1, 4, 2))
        y = T.reshape(y, (self.c_out, 2 * h, 2 * w))
        return y + T.reshape(self.bias, (self.c_out, 1, 1))
