"""
Vision Transformer 인코더

pre-norm Transformer 블록, 학습형 위치 임베딩, 선택 블록의 토큰 출력 기록.
pre / post 두 시점 영상이 같은 인코더 인스턴스를 공유합니다.
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.models.schemas import Strategy, ViTConfig
from src.nn import tensor as T
from src.nn.layers import LayerNorm, Linear
from src.nn.lora import ADAPTER_MARKER
from src.nn.module import Module, Parameter
from src.nn.rng import Rng
from src.utils.errors import ConfigurationError, DimensionError

logger = logging.getLogger(__name__)

ENCODER_PREFIX = "encoder."


class PatchEmbed(Module):
    """[C×H×W] -> [N×D], 투영은 (C·p·p)→D Linear (patch_embed_1x1 역할)"""

    def __init__(self, config: ViTConfig, rng: Rng, dtype):
        self.patch = config.patch
        self.in_chans = config.in_chans
        self.proj = Linear(
            config.in_chans * config.patch**2,
            config.d_model,
            rng,
            role="patch_embed_1x1",
            dtype=dtype,
        )

    def forward(self, x: T.Tensor) -> T.Tensor:
        if x.shape[0] != self.in_chans:
            raise DimensionError(f"encoder expects {self.in_chans} channels, got {x.shape[0]}")
        tokens = T.patch_embed(x, self.patch, T.permute(self.proj.weight, (1, 0)))
        tokens = tokens + self.proj.bias
        if self.proj.adapter is not None:
            tokens = tokens + self.proj.adapter(T.extract_patches(x, self.patch))
        return tokens


class Attention(Module):
    """다중 헤드 self-attention, q/k/v는 하나의 fused 투영"""

    def __init__(self, d_model: int, heads: int, rng: Rng, dtype):
        self.heads = heads
        self.head_dim = d_model // heads
        self.qkv = Linear(d_model, 3 * d_model, rng, role="qkv_fused", dtype=dtype)
        self.proj = Linear(d_model, d_model, rng, role="attn_out", dtype=dtype)

    def forward(self, x: T.Tensor) -> T.Tensor:
        n, d = x.shape
        qkv = T.reshape(self.qkv(x), (n, 3, self.heads, self.head_dim))
        qkv = T.permute(qkv, (1, 2, 0, 3))
        q, k, v = qkv[0], qkv[1], qkv[2]
        scores = T.matmul(q, T.permute(k, (0, 2, 1))) * (1.0 / math.sqrt(self.head_dim))
        out = T.matmul(T.softmax(scores, axis=-1), v)
        out = T.reshape(T.permute(out, (1, 0, 2)), (n, d))
        return self.proj(out)


class Mlp(Module):
    def __init__(self, d_model: int, hidden: int, rng: Rng, dtype):
        self.fc1 = Linear(d_model, hidden, rng, role="mlp_fc1", dtype=dtype)
        self.fc2 = Linear(hidden, d_model, rng, role="mlp_fc2", dtype=dtype)

    def forward(self, x: T.Tensor) -> T.Tensor:
        return self.fc2(T.gelu(self.fc1(x)))


class Block(Module):
    """x + Attn(LN(x)), 이어서 x + MLP(LN(x))"""

    def __init__(self, config: ViTConfig, rng: Rng, dtype):
        self.norm1 = LayerNorm(config.d_model, dtype=dtype)
        self.attn = Attention(config.d_model, config.heads, rng.child(), dtype)
        self.norm2 = LayerNorm(config.d_model, dtype=dtype)
        self.mlp = Mlp(config.d_model, config.d_model * config.mlp_ratio, rng.child(), dtype)

    def forward(self, x: T.Tensor) -> T.Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


@dataclass
class TokenFeatures:
    """선택 블록별 토큰 시퀀스 T_ℓ [N(+1)×D]"""

    layers: list[int]
    tokens: list[T.Tensor]
    has_cls: bool

    def __getitem__(self, layer: int) -> T.Tensor:
        return self.tokens[self.layers.index(layer)]


class VisionTransformer(Module):
    """공유 ViT 인코더"""

    def __init__(self, config: ViTConfig, rng: Rng):
        dtype = np.dtype(config.dtype)
        self.config = config
        self.patch_embed = PatchEmbed(config, rng.child(), dtype)
        n_tokens = config.num_patches + (1 if config.use_cls_token else 0)
        self.cls_token: Optional[Parameter] = None
        if config.use_cls_token:
            self.cls_token = Parameter((1, config.d_model), rng.child(), dtype=dtype)
        self.pos_embed = Parameter((n_tokens, config.d_model), rng.child(), dtype=dtype)
        self.blocks = [Block(config, rng.child(), dtype) for _ in range(config.depth)]

    def forward(self, x: T.Tensor) -> TokenFeatures:
        return encode(self, x)

    def checksum(self) -> str:
        return encoder_checksum(self)


def encode(encoder: VisionTransformer, x: T.Tensor) -> TokenFeatures:
    """
    이미지를 인코딩하고 선택 블록의 출력 토큰을 기록합니다.

    Args:
        encoder: 인코더
        x: [C×img×img] 입력

    Returns:
        TokenFeatures: 선택 블록 출력 (블록 통과 후, 정규화 전)
    """
    config = encoder.config
    if x.ndim != 3 or x.shape[1:] != (config.img_size, config.img_size):
        raise DimensionError(
            f"encoder expects [{config.in_chans}×{config.img_size}×{config.img_size}], "
            f"got {x.shape}"
        )
    if x.dtype != np.dtype(config.dtype):
        x = T.cast(x, config.dtype)
    tokens = encoder.patch_embed(x)
    if encoder.cls_token is not None:
        tokens = T.concat([encoder.cls_token, tokens], axis=0)
    if tokens.shape != encoder.pos_embed.shape:
        raise DimensionError(
            f"positional embedding {encoder.pos_embed.shape} != token shape {tokens.shape}"
        )
    h = tokens + encoder.pos_embed

    wanted = set(config.selected_layers)
    recorded: dict[int, T.Tensor] = {}
    for index, block in enumerate(encoder.blocks):
        h = block(h)
        if index in wanted:
            recorded[index] = h
        if len(recorded) == len(wanted):
            break
    layers = list(config.selected_layers)
    return TokenFeatures(
        layers=layers, tokens=[recorded[i] for i in layers], has_cls=config.use_cls_token
    )


def tokens_to_grid(tokens: T.Tensor, has_cls: bool = False) -> T.Tensor:
    """
    [N(+1)×D] 토큰을 [D×h×w] 격자로 변환 (F[d, i, j] = T[i·w + j, d])

    Args:
        tokens: 토큰 시퀀스
        has_cls: 첫 토큰이 class 토큰이면 True (제거됨)
    """
    if tokens.ndim != 2:
        raise DimensionError(f"tokens must be [N×D], got {tokens.shape}")
    if has_cls:
        tokens = tokens[1:]
    n, d = tokens.shape
    side = math.isqrt(n)
    if side * side != n:
        raise DimensionError(f"{n} spatial tokens do not form a square grid")
    return T.reshape(T.permute(tokens, (1, 0)), (d, side, side))


def set_trainability(model: Module, strategy: Strategy) -> None:
    """
    적응 전략에 따라 파라미터 학습 여부를 설정합니다.

    Args:
        model: encoder 속성을 가진 전체 모델
        strategy: FULL_FT (전부), DECODER_ONLY (인코더 고정),
                  LORA (인코더 고정, 어댑터 + 넥/디코더/헤드 학습)
    """
    strategy = Strategy(strategy)
    named = list(model.named_parameters())
    has_adapters = any(ADAPTER_MARKER in name for name, _ in named)
    if strategy is Strategy.LORA and not has_adapters:
        raise ConfigurationError("LoRA strategy requires attached adapters")

    for name, param in named:
        in_encoder = name.startswith(ENCODER_PREFIX)
        if strategy is Strategy.FULL_FT or not in_encoder:
            param.trainable = True
        elif ADAPTER_MARKER in name:
            param.trainable = strategy is Strategy.LORA
        else:
            param.trainable = False
    logger.debug("Applied %s trainability to %d parameters", strategy.value, len(named))


def encoder_checksum(encoder: Module) -> str:
    """어댑터를 제외한 인코더 가중치의 sha256 (이름 순)"""
    digest = hashlib.sha256()
    for name, param in sorted(encoder.named_parameters(), key=lambda item: item[0]):
        if ADAPTER_MARKER in f".{name}":
            continue
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(param.data).tobytes())
    return digest.hexdigest()
