"""
diffcore 텐서

numpy 위에 올린 최소한의 reverse-mode 자동미분 텐서.
모델이 실제로 쓰는 연산만 제공하며, 각 연산은 forward 결과와 backward 클로저를 테이프에 기록합니다.
backward는 명시적인 위상 정렬 순서로 실행되므로 같은 그래프는 항상 같은 순서로 기울기를 누적합니다.
"""

import math
import threading
from contextlib import contextmanager
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import erf

from src.utils.errors import ContractError, DimensionError, NonFiniteError

DEFAULT_DTYPE = np.dtype(np.float32)
SUPPORTED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

# 스레드별 기울기 기록 여부 (윈도우 병렬 추론)
_grad_mode = threading.local()

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


@contextmanager
def no_grad() -> Iterator[None]:
    """블록 안의 연산을 테이프에 기록하지 않습니다 (추론용)."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


class Tensor:
    """
    n차원 수치 배열 + 기울기 테이프 노드

    float32/float64 배열은 dtype을 유지하고, 그 외 입력은 float32로 변환합니다.
    """

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        array = np.asarray(data, dtype=dtype)
        if array.dtype not in SUPPORTED_DTYPES:
            array = array.astype(DEFAULT_DTYPE)
        self.data = array
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple["Tensor", ...] = ()
        self._backward: BackwardFn | None = None
        self.op = "leaf"

    @classmethod
    def _from_op(
        cls, data: np.ndarray, parents: tuple["Tensor", ...], backward: BackwardFn, op: str
    ) -> "Tensor":
        if not np.all(np.isfinite(data)):
            raise NonFiniteError(f"non-finite values produced by {op}")
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.op = op
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        # 기울기가 필요 없으면 그래프를 잡아두지 않음
        out._parents = parents if out.requires_grad else ()
        out._backward = backward if out.requires_grad else None
        return out

    # ------------------------------------------------------------------
    # 속성
    # ------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def T(self) -> "Tensor":
        return permute(self, (1, 0))

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op})"

    # ------------------------------------------------------------------
    # 역전파
    # ------------------------------------------------------------------

    def backward(self, grad: np.ndarray | None = None) -> None:
        """
        이 노드에서 시작해 리프 텐서의 .grad에 기울기를 누적합니다.

        Args:
            grad: 출력 기울기 (스칼라 출력이면 생략 가능)
        """
        if grad is None:
            if self.size != 1:
                raise ContractError("backward() without an explicit grad needs a scalar output")
            grad = np.ones(self.shape, dtype=self.dtype)
        elif grad.shape != self.shape:
            raise ContractError(f"grad shape {grad.shape} does not match output {self.shape}")
        if not self.requires_grad:
            return

        pending: dict[int, np.ndarray] = {id(self): grad}
        for node in reversed(_topological_order(self)):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.astype(node.dtype, copy=True) if node.grad is None else node.grad + g
                continue
            for parent, parent_grad in zip(node._parents, node._backward(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent_grad = parent_grad.astype(parent.dtype, copy=False)
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    # ------------------------------------------------------------------
    # 연산자
    # ------------------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def permute(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return permute(self, axes)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tensor_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tensor_mean(self, axis, keepdims)


def _topological_order(root: Tensor) -> list[Tensor]:
    """부모가 자식보다 앞에 오는 순서 (반복 DFS, 재귀 한도 없음)"""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def as_tensor(value, like: Tensor | None = None) -> Tensor:
    """Tensor가 아니면 상수 텐서로 감쌉니다 (like의 dtype을 따름)."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise DimensionError(f"axis {axis} out of range for a {ndim}-d tensor")
    return axis % ndim


# ============================================================
# 원소별 연산
# ============================================================


def _broadcast(op: str, a: Tensor, b: Tensor, fn) -> np.ndarray:
    try:
        return fn(a.data, b.data)
    except ValueError as exc:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from exc


def add(a, b) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    out = _broadcast("add", a, b, np.add)
    return Tensor._from_op(
        out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add"
    )


def sub(a, b) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    out = _broadcast("sub", a, b, np.subtract)
    return Tensor._from_op(
        out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), "sub"
    )


def mul(a, b) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    out = _broadcast("mul", a, b, np.multiply)
    return Tensor._from_op(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
        "mul",
    )


def div(a, b) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    out = _broadcast("div", a, b, np.divide)
    return Tensor._from_op(
        out,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ),
        "div",
    )


def gelu(x: Tensor) -> Tensor:
    """정확한 (erf 기반) GELU"""
    cdf = 0.5 * (1.0 + erf(x.data / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x.data * x.data) / math.sqrt(2.0 * math.pi)
    out = (x.data * cdf).astype(x.dtype, copy=False)
    return Tensor._from_op(out, (x,), lambda g: (g * (cdf + x.data * pdf),), "gelu")


def cast(x: Tensor, dtype) -> Tensor:
    """dtype 변환 (기울기는 원래 dtype으로 되돌아감)"""
    return Tensor._from_op(x.data.astype(dtype), (x,), lambda g: (g,), "cast")


# ============================================================
# 축소 / 형태 변환
# ============================================================


def tensor_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is not None:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(_check_axis(a, x.ndim) for a in axes)
    else:
        axes = None
    out = np.sum(x.data, axis=axes, keepdims=keepdims)

    def backward(g):
        if axes is not None and not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape),)

    return Tensor._from_op(np.asarray(out, dtype=x.dtype), (x,), backward, "sum")


def tensor_mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    total = tensor_sum(x, axis, keepdims)
    count = x.size // max(total.size, 1) if axis is not None else x.size
    return mul(total, 1.0 / count)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {x.shape} into {tuple(shape)}") from exc
    return Tensor._from_op(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def permute(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(a % x.ndim for a in axes) != list(range(x.ndim)) or len(axes) != x.ndim:
        raise DimensionError(f"invalid permutation {axes} for a {x.ndim}-d tensor")
    inverse = tuple(np.argsort([a % x.ndim for a in axes]))
    return Tensor._from_op(
        x.data.transpose(axes), (x,), lambda g: (g.transpose(inverse),), "permute"
    )


def take(x: Tensor, index) -> Tensor:
    try:
        out = x.data[index]
    except IndexError as exc:
        raise DimensionError(f"index {index!r} invalid for shape {x.shape}") from exc

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return Tensor._from_op(np.array(out, copy=True), (x,), backward, "take")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """axis 방향으로 이어 붙입니다. 입력 순서대로 블록이 보존됩니다."""
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    axis = _check_axis(axis, ndim)

    def off_axis(shape: tuple[int, ...]) -> tuple[int, ...]:
        return shape[:axis] + shape[axis + 1:]

    for t in tensors:
        if t.ndim != ndim or off_axis(t.shape) != off_axis(tensors[0].shape):
            raise DimensionError(
                f"concat: shapes {[t.shape for t in tensors]} disagree off axis {axis}"
            )
    out = np.concatenate([t.data for t in tensors], axis=axis)
    cuts = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return Tensor._from_op(
        out, tuple(tensors), lambda g: tuple(np.split(g, cuts, axis=axis)), "concat"
    )


# ============================================================
# 선형대수
# ============================================================


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """행렬곱. 앞쪽 배치 축은 numpy matmul 규칙으로 브로드캐스트됩니다."""
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs operands of rank >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise DimensionError(f"matmul batch dimensions disagree: {a.shape} x {b.shape}") from exc

    def backward(g):
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return Tensor._from_op(out, (a, b), backward, "matmul")


# ============================================================
# 정규화 / 확률
# ============================================================


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    axis = _check_axis(axis, x.ndim)
    shifted = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
    y = shifted / shifted.sum(axis=axis, keepdims=True)
    return Tensor._from_op(
        y, (x,), lambda g: (y * (g - (g * y).sum(axis=axis, keepdims=True)),), "softmax"
    )


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    axis = _check_axis(axis, x.ndim)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - logsum
    probs = np.exp(out)
    return Tensor._from_op(
        out, (x,), lambda g: (g - probs * g.sum(axis=axis, keepdims=True),), "log_softmax"
    )


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    """
    마지막 축 기준 layer normalization (편향 분산 사용)

    Args:
        x: [..×d] 입력
        gamma, beta: [d] affine 파라미터
        eps: 분산 안정화 상수
    """
    d = x.shape[-1] if x.ndim else 0
    if d == 0:
        raise DimensionError("layer_norm over an empty last dimension")
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm affine shapes {gamma.shape}/{beta.shape} != ({d},)")

    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gamma.data + beta.data

    def backward(g):
        lead = tuple(range(g.ndim - 1))
        grad_gamma = (g * xhat).sum(axis=lead)
        grad_beta = g.sum(axis=lead)
        dxhat = g * gamma.data
        grad_x = inv / d * (
            d * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
        )
        return grad_x, grad_gamma, grad_beta

    out = out.astype(x.dtype, copy=False)
    return Tensor._from_op(out, (x, gamma, beta), backward, "layer_norm")


# ============================================================
# 공간 연산 ([C×H×W] 단일 샘플)
# ============================================================


def _require_chw(x: Tensor, op: str) -> None:
    if x.ndim != 3:
        raise DimensionError(f"{op} expects a [C×H×W] tensor, got shape {x.shape}")


def interp_matrix(in_size: int, out_size: int, dtype=np.float64) -> np.ndarray:
    """
    1차원 선형 보간 행렬 [out×in]

    half-pixel 중심 규약 (align_corners=False):
    src = (dst + 0.5) * in/out - 0.5, 음수는 0으로 자르고 오른쪽 끝은 마지막 픽셀을 반복합니다.
    """
    if in_size < 1 or out_size < 1:
        raise DimensionError(f"interpolation sizes must be >= 1 (in={in_size}, out={out_size})")
    matrix = np.zeros((out_size, in_size), dtype=dtype)
    scale = in_size / out_size
    for dst in range(out_size):
        src = max((dst + 0.5) * scale - 0.5, 0.0)
        lo = min(int(math.floor(src)), in_size - 1)
        hi = min(lo + 1, in_size - 1)
        frac = src - lo
        matrix[dst, lo] += 1.0 - frac
        matrix[dst, hi] += frac
    return matrix


def pool_matrix(in_size: int, out_size: int, dtype=np.float64) -> np.ndarray:
    """적응형 평균 풀링 행렬 [out×in]: bin = [floor(i·in/out), ceil((i+1)·in/out))"""
    if in_size < 1 or out_size < 1:
        raise DimensionError(f"pooling sizes must be >= 1 (in={in_size}, out={out_size})")
    matrix = np.zeros((out_size, in_size), dtype=dtype)
    for i in range(out_size):
        start = (i * in_size) // out_size
        end = -((-(i + 1) * in_size) // out_size)
        matrix[i, start:end] = 1.0 / (end - start)
    return matrix


def resample(x: Tensor, rows: np.ndarray, cols: np.ndarray, op: str = "resample") -> Tensor:
    """분리 가능한 선형 재표본화: out[c] = rows @ x[c] @ colsᵀ"""
    _require_chw(x, op)
    rows = rows.astype(x.dtype, copy=False)
    cols = cols.astype(x.dtype, copy=False)
    out = np.matmul(np.matmul(rows, x.data), cols.T)
    return Tensor._from_op(
        out, (x,), lambda g: (np.matmul(np.matmul(rows.T, g), cols),), op
    )


def bilinear_resize(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """[C×h×w] -> [C×out_h×out_w] 양선형 보간 (half-pixel 중심)"""
    _require_chw(x, "bilinear_resize")
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"bilinear_resize target size must be >= 1, got {out_h}×{out_w}")
    _, h, w = x.shape
    if (h, w) == (out_h, out_w):
        return x
    return resample(x, interp_matrix(h, out_h), interp_matrix(w, out_w), "bilinear_resize")


def adaptive_avg_pool(x: Tensor, out_h: int, out_w: int) -> Tensor:
    _require_chw(x, "adaptive_avg_pool")
    _, h, w = x.shape
    return resample(x, pool_matrix(h, out_h), pool_matrix(w, out_w), "adaptive_avg_pool")


def max_pool2d(x: Tensor) -> Tensor:
    """2×2 / stride 2 최대 풀링 (동률이면 첫 번째 위치로 기울기 전달)"""
    _require_chw(x, "max_pool2d")
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"max_pool2d needs even spatial extents, got {h}×{w}")
    windows = x.data.reshape(c, h // 2, 2, w // 2, 2).transpose(0, 1, 3, 2, 4).reshape(
        c, h // 2, w // 2, 4
    )
    winner = windows.argmax(axis=-1)[..., None]
    out = np.take_along_axis(windows, winner, axis=-1)[..., 0]

    def backward(g):
        grad_windows = np.zeros_like(windows)
        np.put_along_axis(grad_windows, winner, g[..., None], axis=-1)
        grad = grad_windows.reshape(c, h // 2, w // 2, 2, 2).transpose(0, 1, 3, 2, 4)
        return (grad.reshape(c, h, w),)

    return Tensor._from_op(out, (x,), backward, "max_pool2d")


def pad_edge(x: Tensor, pad: int) -> Tensor:
    """가장자리 값을 반복하는 (replicate) 패딩"""
    _require_chw(x, "pad_edge")
    _, h, w = x.shape
    rows = np.clip(np.arange(-pad, h + pad), 0, h - 1)
    cols = np.clip(np.arange(-pad, w + pad), 0, w - 1)
    out = x.data[:, rows][:, :, cols]

    def backward(g):
        grad = np.zeros((h, w, x.shape[0]), dtype=g.dtype)
        np.add.at(grad, (rows[:, None], cols[None, :]), g.transpose(1, 2, 0))
        return (grad.transpose(2, 0, 1),)

    return Tensor._from_op(out, (x,), backward, "pad_edge")


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """
    stride 1, valid 합성곱

    Args:
        x: [C×H×W]
        weight: [O×C×k×k]
        bias: [O] (선택)

    Returns:
        [O×(H-k+1)×(W-k+1)]
    """
    _require_chw(x, "conv2d")
    if weight.ndim != 4 or weight.shape[1] != x.shape[0] or weight.shape[2] != weight.shape[3]:
        raise DimensionError(f"conv2d weight {weight.shape} incompatible with input {x.shape}")
    k = weight.shape[2]
    if x.shape[1] < k or x.shape[2] < k:
        raise DimensionError(f"conv2d input {x.shape} smaller than kernel {k}")
    windows = np.lib.stride_tricks.sliding_window_view(x.data, (k, k), axis=(1, 2))
    out = np.tensordot(weight.data, windows, axes=([1, 2, 3], [0, 3, 4]))
    if bias is not None:
        out = out + bias.data[:, None, None]
    out_h, out_w = out.shape[1:]

    def backward(g):
        grad_w = np.tensordot(g, windows, axes=([1, 2], [1, 2]))
        grad_x = np.zeros_like(x.data)
        for i in range(k):
            for j in range(k):
                grad_x[:, i:i + out_h, j:j + out_w] += np.tensordot(
                    weight.data[:, :, i, j], g, axes=([0], [0])
                )
        grads = [grad_x, grad_w]
        if bias is not None:
            grads.append(g.sum(axis=(1, 2)))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._from_op(out, parents, backward, "conv2d")


def extract_patches(x: Tensor, patch: int) -> Tensor:
    """[C×H×W] -> [N×(C·p·p)], 겹치지 않는 p×p 패치를 행 우선 순서로 나열"""
    _require_chw(x, "extract_patches")
    c, h, w = x.shape
    if patch < 1 or h % patch or w % patch:
        raise DimensionError(f"patch size {patch} does not divide image extent {h}×{w}")
    gh, gw = h // patch, w // patch
    grid = reshape(x, (c, gh, patch, gw, patch))
    grid = permute(grid, (1, 3, 0, 2, 4))
    return reshape(grid, (gh * gw, c * patch * patch))


def patch_embed(x: Tensor, patch: int, proj: Tensor) -> Tensor:
    """
    패치 임베딩

    Args:
        x: [C×H×W] 이미지
        patch: 패치 크기 p
        proj: [(C·p·p)×d] 투영 행렬

    Returns:
        [N×d] 토큰, N = (H/p)(W/p)
    """
    return matmul(extract_patches(x, patch), proj)
