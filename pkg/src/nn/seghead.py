"""
세그멘테이션 헤드

피라미드 넥 (토큰 격자 → 4단계 멀티스케일), 두 시점 채널 결합,
UPerNet 디코더 (PPM + top-down FPN + 융합), 1×1 분류 헤드.
"""

from dataclasses import dataclass

from src.models.schemas import HeadConfig
from src.nn import tensor as T
from src.nn.layers import Conv1x1, Conv3x3, ConvTranspose2x2
from src.nn.module import Module
from src.nn.rng import Rng
from src.utils.errors import ConfigurationError, DimensionError

NUM_CLASSES = 2
BURNED = 1


@dataclass
class PyramidLevels:
    """P_1..P_4 [c×h_k×w_k], 패치 격자 대비 ×4, ×2, ×1, ×½"""

    levels: list[T.Tensor]

    def __post_init__(self):
        if len(self.levels) != 4:
            raise ConfigurationError(f"pyramid needs 4 levels, got {len(self.levels)}")

    def shapes(self) -> list[tuple[int, ...]]:
        return [level.shape for level in self.levels]


@dataclass
class FusedPyramid:
    """Z_k = concat(P_pre_k, P_post_k) [2c×h_k×w_k]"""

    levels: list[T.Tensor]


# ============================================================
# 넥
# ============================================================


class NeckLevel(Module):
    """1×1 투영 후 단계별 재표본화"""

    def __init__(self, level: int, d_model: int, c_neck: int, rng: Rng, dtype):
        self.level = level
        self.proj = Conv1x1(d_model, c_neck, rng, dtype=dtype)
        self.up = []
        if level == 0:
            self.up = [
                ConvTranspose2x2(c_neck, c_neck, rng, dtype=dtype),
                ConvTranspose2x2(c_neck, c_neck, rng, dtype=dtype),
            ]
        elif level == 1:
            self.up = [ConvTranspose2x2(c_neck, c_neck, rng, dtype=dtype)]

    def forward(self, grid: T.Tensor) -> T.Tensor:
        x = self.proj(grid)
        for index, up in enumerate(self.up):
            if index:
                x = T.gelu(x)
            x = up(x)
        if self.level == 3:
            x = T.max_pool2d(x)
        return x


class PyramidNeck(Module):
    def __init__(self, d_model: int, config: HeadConfig, rng: Rng, dtype):
        self.levels = [NeckLevel(k, d_model, config.c_neck, rng.child(), dtype) for k in range(4)]

    def forward(self, features: list[T.Tensor]) -> PyramidLevels:
        return neck_forward(self, features)


def neck_forward(neck: PyramidNeck, features: list[T.Tensor]) -> PyramidLevels:
    """
    선택 블록 4개의 격자 특징을 4단계 피라미드로 변환합니다.

    Args:
        neck: 넥 모듈
        features: F_ℓ [D×h×w] 4개 (같은 D)

    Returns:
        PyramidLevels: ×4, ×2, ×1, ×½ 해상도
    """
    if len(features) != 4:
        raise ConfigurationError(f"neck needs 4 feature maps, got {len(features)}")
    widths = {f.shape[0] for f in features}
    if len(widths) != 1:
        raise DimensionError(f"feature maps disagree on channel width: {sorted(widths)}")
    return PyramidLevels([level(f) for level, f in zip(neck.levels, features)])


def fuse_bitemporal(pre: PyramidLevels, post: PyramidLevels) -> FusedPyramid:
    """단계별 채널 결합, pre 채널이 앞"""
    fused = []
    for k, (a, b) in enumerate(zip(pre.levels, post.levels)):
        if a.shape != b.shape:
            raise DimensionError(f"level {k + 1}: pre {a.shape} != post {b.shape}")
        fused.append(T.concat([a, b], axis=0))
    return FusedPyramid(fused)


# ============================================================
# UPerNet 디코더
# ============================================================


class ConvAct(Module):
    """합성곱 + GELU"""

    def __init__(self, conv: Module):
        self.conv = conv

    def forward(self, x: T.Tensor) -> T.Tensor:
        return T.gelu(self.conv(x))


class PyramidPooling(Module):
    """가장 거친 단계에 대한 pyramid pooling module"""

    def __init__(self, c_in: int, c_dec: int, scales: list[int], rng: Rng, dtype):
        self.scales = list(scales)
        self.branches = [ConvAct(Conv1x1(c_in, c_dec, rng, dtype=dtype)) for _ in self.scales]
        self.bottleneck = ConvAct(
            Conv3x3(c_in + len(self.scales) * c_dec, c_dec, rng, dtype=dtype)
        )

    def forward(self, x: T.Tensor) -> T.Tensor:
        _, h, w = x.shape
        pooled = [x]
        for scale, branch in zip(self.scales, self.branches):
            y = branch(T.adaptive_avg_pool(x, scale, scale))
            pooled.append(T.bilinear_resize(y, h, w))
        return self.bottleneck(T.concat(pooled, axis=0))


class UPerNetDecoder(Module):
    def __init__(self, c_in: int, config: HeadConfig, rng: Rng, dtype):
        c_dec = config.c_dec
        self.ppm = PyramidPooling(c_in, c_dec, config.pool_scales, rng.child(), dtype)
        self.laterals = [ConvAct(Conv1x1(c_in, c_dec, rng, dtype=dtype)) for _ in range(3)]
        self.smooth = [ConvAct(Conv3x3(c_dec, c_dec, rng, dtype=dtype)) for _ in range(3)]
        self.fuse = ConvAct(Conv1x1(4 * c_dec, c_dec, rng, dtype=dtype))

    def forward(self, z: FusedPyramid) -> T.Tensor:
        return upernet_forward(self, z)


def upernet_forward(decoder: UPerNetDecoder, z: FusedPyramid) -> T.Tensor:
    """
    FusedPyramid → 가장 세밀한 해상도의 dense 특징 [c_dec×h_1×w_1]

    Args:
        decoder: 디코더
        z: 결합된 4단계 피라미드
    """
    levels = z.levels
    inner = [lateral(level) for lateral, level in zip(decoder.laterals, levels[:3])]
    inner.append(decoder.ppm(levels[3]))

    # top-down: 거친 단계를 올려서 더함
    for k in range(2, -1, -1):
        _, h, w = inner[k].shape
        inner[k] = inner[k] + T.bilinear_resize(inner[k + 1], h, w)

    outs = [smooth(inner[k]) for k, smooth in enumerate(decoder.smooth)]
    outs.append(inner[3])

    _, h1, w1 = outs[0].shape
    resized = [outs[0]] + [T.bilinear_resize(o, h1, w1) for o in outs[1:]]
    return decoder.fuse(T.concat(resized, axis=0))


class ClassifierHead(Module):
    def __init__(self, c_dec: int, rng: Rng, dtype):
        self.conv = Conv1x1(c_dec, NUM_CLASSES, rng, dtype=dtype)

    def forward(self, dense: T.Tensor, height: int, width: int) -> tuple[T.Tensor, T.Tensor]:
        return classify(self, dense, height, width)


def classify(
    head: ClassifierHead, dense: T.Tensor, height: int, width: int
) -> tuple[T.Tensor, T.Tensor]:
    """
    1×1 합성곱 → 양선형 업샘플 → 클래스 축 softmax

    Returns:
        (logits [2×H×W], 확률 [2×H×W]), 채널 1이 burned
    """
    logits = T.bilinear_resize(head.conv(dense), height, width)
    return logits, T.softmax(logits, axis=0)
