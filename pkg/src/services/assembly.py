"""
모델 조립

공유 ViT 인코더 + 피라미드 넥 + UPerNet 디코더 + 분류 헤드를 전략별로 구성하고,
파라미터 집계 (encoder_only / full_network)를 제공합니다.
"""

import hashlib
import json
import logging
from typing import Literal

import numpy as np

from src.data.scene import normalize_bands
from src.models.schemas import LoraSpec, ModelConfig, ParamReport, RunConfig, Strategy
from src.nn import tensor as T
from src.nn.backbone import (
    ENCODER_PREFIX,
    VisionTransformer,
    encode,
    set_trainability,
    tokens_to_grid,
)
from src.nn.lora import attach_all
from src.nn.module import Module
from src.nn.rng import Rng
from src.nn.seghead import ClassifierHead, PyramidNeck, UPerNetDecoder, fuse_bitemporal

logger = logging.getLogger(__name__)

# 어댑터 난수 스트림 키 (나머지 파라미터의 child 순번과 겹치지 않음)
ADAPTER_STREAM = 101


class ModelAssembly(Module):
    """(x_pre, x_post) → 픽셀별 burned / unburned 로짓"""

    def __init__(
        self,
        config: ModelConfig,
        strategy: Strategy,
        lora: LoraSpec,
        seed: int,
        band_mean: list[float] | None = None,
        band_std: list[float] | None = None,
    ):
        vit = config.vit
        dtype = np.dtype(vit.dtype)
        root = Rng(seed)
        self.config = config
        self.strategy = Strategy(strategy)
        self.lora_spec = lora
        self.seed = seed
        self.band_mean = band_mean
        self.band_std = band_std
        self.encoder = VisionTransformer(vit, root.child())
        self.neck = PyramidNeck(vit.d_model, config.head, root.child(), dtype)
        self.decoder = UPerNetDecoder(2 * config.head.c_neck, config.head, root.child(), dtype)
        self.head = ClassifierHead(config.head.c_dec, root.child(), dtype)
        if self.strategy is Strategy.LORA:
            attach_all(self.encoder, lora, root.derive(ADAPTER_STREAM))

    @property
    def input_size(self) -> int:
        return self.config.vit.img_size

    def forward(self, pre: T.Tensor, post: T.Tensor) -> tuple[T.Tensor, T.Tensor]:
        """
        Args:
            pre, post: [C×H×W] (표준화된 입력)

        Returns:
            (logits [2×H×W], 확률 [2×H×W])
        """
        pyramids = []
        for x in (pre, post):
            features = encode(self.encoder, x)
            grids = [tokens_to_grid(t, features.has_cls) for t in features.tokens]
            pyramids.append(self.neck(grids))
        dense = self.decoder(fuse_bitemporal(*pyramids))
        _, height, width = pre.shape
        return self.head(dense, height, width)

    def prepare(self, bands: np.ndarray) -> T.Tensor:
        """반사율 [3×H×W] → 표준화된 입력 텐서"""
        if self.band_mean is not None and self.band_std is not None:
            bands = normalize_bands(bands, self.band_mean, self.band_std)
        return T.Tensor(np.asarray(bands, dtype=self.config.vit.dtype))

    def predict_logits(self, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
        """기울기 없이 로짓 [2×H×W] 계산"""
        with T.no_grad():
            logits, _ = self(self.prepare(pre), self.prepare(post))
        return logits.data


def build_model(
    config: ModelConfig,
    strategy: Strategy,
    lora: LoraSpec | None = None,
    seed: int = 0,
    band_mean: list[float] | None = None,
    band_std: list[float] | None = None,
) -> ModelAssembly:
    """
    전략에 맞게 모델을 구성합니다.

    Args:
        config: 인코더 / 헤드 구성
        strategy: full_ft, decoder_only, lora
        lora: LoRA 설정 (lora 전략에서만 사용)
        seed: 초기화 시드 (같은 시드면 base 가중치가 전략과 무관하게 같음)
        band_mean, band_std: 입력 표준화 통계

    Returns:
        ModelAssembly
    """
    assembly = ModelAssembly(config, strategy, lora or LoraSpec(), seed, band_mean, band_std)
    set_trainability(assembly, assembly.strategy)
    assembly.assign_names()
    for report in (param_report(assembly, "encoder_only"), param_report(assembly, "full_network")):
        logger.debug("%s: %s", report.scope, " / ".join(format_param_report(report)))
    return assembly


def param_report(
    assembly: Module, scope: Literal["encoder_only", "full_network"]
) -> ParamReport:
    """범위 내 전체 / 학습 가능 파라미터 수 (값을 생성하지 않고 shape만 사용)"""
    total = 0
    trainable = 0
    for name, param in assembly.named_parameters():
        if scope == "encoder_only" and not name.startswith(ENCODER_PREFIX):
            continue
        count = int(np.prod(param.shape, dtype=np.int64))
        total += count
        if param.trainable:
            trainable += count
    return ParamReport(scope=scope, total=total, trainable=trainable)


def format_param_report(report: ParamReport) -> list[str]:
    return [
        f"Total params: {report.total:,}",
        f"Trainable params: {report.trainable:,} ({report.percent:.4f}%)",
    ]


def summary_line(report: ParamReport) -> str:
    """한 줄 요약 (예: encoder_only: total 86136576 trainable 442368 (0.5136%))"""
    return (
        f"{report.scope}: total {report.total} "
        f"trainable {report.trainable} ({report.percent:.4f}%)"
    )


def config_hash(config: ModelConfig, lora: LoraSpec, strategy: Strategy) -> str:
    """구조를 결정하는 설정 (model, lora 전략일 때 lora, strategy)의 sha256"""
    strategy = Strategy(strategy)
    payload = {
        "model": config.model_dump(mode="json"),
        "lora": lora.model_dump(mode="json") if strategy is Strategy.LORA else None,
        "strategy": strategy.value,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def assembly_from_config(
    config: RunConfig, strategy: Strategy | str | None = None
) -> ModelAssembly:
    """실행 설정 (model, lora, train.seed, data 정규화 통계)으로 모델 구성"""
    return build_model(
        config.model,
        Strategy(strategy) if strategy else config.train.strategy,
        config.lora,
        config.train.seed,
        config.data.band_mean,
        config.data.band_std,
    )
