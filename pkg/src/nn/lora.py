"""
LoRA 어댑터

고정된 Linear 가중치 W [d_out×d_in]에 저랭크 쌍 (A [r×d_in], B [d_out×r])을 붙여
y = Wx + b + α·B(Ax) 를 계산합니다. B=0으로 초기화하므로 부착 직후 출력은 원래 레이어와 같습니다.
"""

import logging
import math
import re
import warnings
from typing import Optional

import numpy as np

from src.models.schemas import LoraCount, LoraSpec
from src.nn import tensor as T
from src.nn.layers import Linear
from src.nn.module import Module, Parameter
from src.nn.rng import Rng
from src.utils.errors import ConfigurationError, DimensionError

logger = logging.getLogger(__name__)

ADAPTER_MARKER = ".adapter."

_BLOCK_INDEX = re.compile(r"\.blocks\.(\d+)\.")


class LoraRankWarning(UserWarning):
    """rank가 min(d_in, d_out) 이상이라 저랭크가 아님"""


class LoraAdapter(Module):
    """저랭크 쌍 (A, B)와 스케일 α"""

    def __init__(self, base: Linear, rank: int, alpha: float, role: str, rng: Rng):
        self.rank = rank
        self.alpha = alpha
        self.role = role
        self._base = base
        dtype = base.weight.dtype
        self.lora_A = Parameter(
            (rank, base.d_in), rng.child(), scale=1.0 / math.sqrt(base.d_in), dtype=dtype
        )
        self.lora_B = Parameter((base.d_out, rank), init="zeros", dtype=dtype)

    @property
    def base(self) -> Linear:
        return self._base

    @property
    def num_params(self) -> int:
        return self.rank * (self._base.d_in + self._base.d_out)

    def forward(self, x: T.Tensor) -> T.Tensor:
        """α·B(Ax)"""
        down = T.matmul(x, T.permute(self.lora_A, (1, 0)))
        up = T.matmul(down, T.permute(self.lora_B, (1, 0)))
        return up * self.alpha


def attach(layer: Linear, spec: LoraSpec, role: str, rng: Rng) -> LoraAdapter:
    """
    Linear 레이어에 어댑터를 부착하고 base 가중치를 고정합니다.

    Args:
        layer: 대상 레이어
        spec: rank / alpha / targets
        role: 레이어 역할 (spec.targets에 있어야 함)
        rng: A 초기화용 난수 스트림

    Returns:
        LoraAdapter: 부착된 어댑터
    """
    if role not in spec.targets:
        raise ConfigurationError(f"role {role!r} not in LoRA targets {spec.targets}")
    if spec.rank >= min(layer.d_in, layer.d_out):
        warnings.warn(
            f"LoRA rank {spec.rank} >= min(d_in={layer.d_in}, d_out={layer.d_out})",
            LoraRankWarning,
            stacklevel=2,
        )
    adapter = LoraAdapter(layer, spec.rank, spec.alpha, role, rng)
    layer.adapter = adapter
    layer.weight.trainable = False
    layer.bias.trainable = False
    return adapter


def forward_adapted(adapter: LoraAdapter, x: T.Tensor) -> T.Tensor:
    """y = Wx + b + α·B(Ax)"""
    base = adapter.base
    if x.shape[-1] != base.d_in:
        raise DimensionError(f"adapter expects last dim {base.d_in}, got {x.shape}")
    return base.forward_base(x) + adapter(x)


def merge_dense(adapter: LoraAdapter) -> np.ndarray:
    """W + α·BA 를 dense 배열로 계산합니다 (base 가중치는 건드리지 않음)."""
    base = adapter.base.weight.data
    delta = adapter.lora_B.data @ adapter.lora_A.data
    return base + np.asarray(adapter.alpha, dtype=base.dtype) * delta


def iter_targets(model: Module):
    """(이름, Linear) 중 LoRA 역할이 있는 레이어"""
    for name, module in model.named_modules():
        if isinstance(module, Linear) and module.role is not None:
            yield name, module


def attach_all(model: Module, spec: LoraSpec, rng: Rng) -> list[LoraAdapter]:
    """
    spec.targets에 해당하는 모든 레이어에 어댑터를 부착합니다.

    어댑터 A의 난수는 레이어 순번에서 유도하므로 나머지 파라미터 초기화에 영향을 주지 않습니다.
    """
    adapters = []
    for index, (_, layer) in enumerate(iter_targets(model)):
        if layer.role in spec.targets:
            adapters.append(attach(layer, spec, layer.role, rng.derive(index)))
    if not adapters:
        raise ConfigurationError(f"no layer matches LoRA targets {spec.targets}")
    return adapters


def _block_of(name: str) -> Optional[int]:
    match = _BLOCK_INDEX.search(f".{name}.")
    return int(match.group(1)) if match else None


def count_lora_params(model: Module, spec: Optional[LoraSpec] = None) -> LoraCount:
    """
    어댑터 파라미터 수 Σ r·(d_in+d_out)를 블록별로 집계합니다.

    Args:
        model: 인코더 또는 전체 모델
        spec: 주어지면 부착 여부와 무관하게 spec 기준으로 해석적으로 계산,
              없으면 실제로 부착된 어댑터를 집계

    Returns:
        LoraCount: 블록별 수와 patch embedding (stem) 수
    """
    per_block: dict[int, int] = {}
    stem = 0
    for name, layer in iter_targets(model):
        if spec is not None:
            count = spec.rank * (layer.d_in + layer.d_out) if layer.role in spec.targets else 0
        else:
            count = layer.adapter.num_params if layer.adapter is not None else 0
        block = _block_of(name)
        if block is None:
            stem += count
        else:
            per_block[block] = per_block.get(block, 0) + count
    blocks = [per_block[i] for i in sorted(per_block)]
    return LoraCount(per_block=blocks, stem=stem)


def export_adapters(model: Module) -> dict[str, np.ndarray]:
    """어댑터 텐서만 이름 → 배열로 복사"""
    state = {
        name: p.data.copy() for name, p in model.named_parameters() if ADAPTER_MARKER in name
    }
    if not state:
        raise ConfigurationError("model has no LoRA adapters to export")
    return state


def import_adapters(model: Module, state: dict[str, np.ndarray]) -> None:
    """export_adapters 결과를 같은 구조의 모델에 적재합니다."""
    own = {name: p for name, p in model.named_parameters() if ADAPTER_MARKER in name}
    if set(own) != set(state):
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        raise ConfigurationError(
            f"adapter set mismatch: missing={missing[:5]} unexpected={unexpected[:5]}"
        )
    for name, value in state.items():
        own[name].data = value.copy()
    logger.info("Imported %d adapter tensors", len(state))
