"""
파라미터 / 모듈 기반 클래스

Module은 속성으로 등록된 Parameter, 하위 Module, Module 리스트를 순서대로 탐색해
계층형 이름 (예: encoder.blocks.3.attn.qkv.weight)을 부여합니다.
"_"로 시작하는 속성은 탐색하지 않습니다.
"""

from typing import Iterator

import numpy as np

from src.nn.rng import Rng
from src.nn.tensor import Tensor
from src.utils.errors import ConfigurationError, DimensionError


class Parameter(Tensor):
    """
    학습 가능 여부와 이름을 가진 리프 텐서

    값은 처음 접근할 때 자신의 Rng 스트림에서 생성됩니다 (lazy).
    shape만 필요한 파라미터 집계는 메모리를 할당하지 않습니다.
    """

    def __init__(
        self,
        shape: tuple[int, ...],
        rng: Rng | None = None,
        init: str = "normal",
        scale: float = 0.02,
        dtype=np.float32,
        trainable: bool = True,
    ):
        if init not in ("normal", "zeros", "ones"):
            raise ConfigurationError(f"unknown initializer {init!r}")
        if init == "normal" and rng is None:
            raise ConfigurationError("normal initialization needs an Rng")
        self._shape = tuple(int(s) for s in shape)
        self._dtype = np.dtype(dtype)
        self._init = init
        self._scale = scale
        self._rng = rng
        self._value: np.ndarray | None = None
        self.requires_grad = trainable
        self.grad = None
        self._parents = ()
        self._backward = None
        self.op = "param"
        self.name = ""

    @property
    def data(self) -> np.ndarray:
        if self._value is None:
            if self._init == "zeros":
                self._value = np.zeros(self._shape, dtype=self._dtype)
            elif self._init == "ones":
                self._value = np.ones(self._shape, dtype=self._dtype)
            else:
                self._value = self._rng.normal(self._shape, self._dtype, self._scale)
            self._rng = None
        return self._value

    @data.setter
    def data(self, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=self._dtype)
        if value.shape != self._shape:
            raise DimensionError(f"{self.name or 'parameter'}: {value.shape} != {self._shape}")
        self._value = value

    @property
    def shape(self) -> tuple[int, ...]:
        return self._shape

    @property
    def dtype(self) -> np.dtype:
        return self._dtype

    @property
    def trainable(self) -> bool:
        return self.requires_grad

    @trainable.setter
    def trainable(self, flag: bool) -> None:
        self.requires_grad = bool(flag)
        if not flag:
            self.grad = None

    @property
    def materialized(self) -> bool:
        return self._value is not None

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"


class Module:
    """계층형 파라미터 컨테이너"""

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def _children(self) -> Iterator[tuple[str, object]]:
        for attr, value in vars(self).items():
            if attr.startswith("_"):
                continue
            if isinstance(value, (Parameter, Module)):
                yield attr, value
            elif isinstance(value, (list, tuple)) and value and all(
                isinstance(v, Module) for v in value
            ):
                for index, item in enumerate(value):
                    yield f"{attr}.{index}", item

    def named_modules(self, prefix: str = "") -> Iterator[tuple[str, "Module"]]:
        yield prefix, self
        for attr, value in self._children():
            if isinstance(value, Module):
                yield from value.named_modules(f"{prefix}.{attr}" if prefix else attr)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        """(이름, 파라미터)를 등록 순서대로 돌려줍니다."""
        for attr, value in self._children():
            full = f"{prefix}.{attr}" if prefix else attr
            if isinstance(value, Parameter):
                yield full, value
            else:
                yield from value.named_parameters(full)

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def assign_names(self) -> int:
        """루트 기준 계층 이름을 각 파라미터의 name에 기록합니다 (옵티마이저 상태 키)."""
        count = 0
        for name, param in self.named_parameters():
            param.name = name
            count += 1
        return count

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray], strict: bool = True) -> None:
        own = dict(self.named_parameters())
        if strict:
            missing = sorted(set(own) - set(state))
            unexpected = sorted(set(state) - set(own))
            if missing or unexpected:
                raise ConfigurationError(
                    f"state mismatch: missing={missing[:5]} unexpected={unexpected[:5]}"
                )
        for name, value in state.items():
            if name in own:
                own[name].data = value.copy()
