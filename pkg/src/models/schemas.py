"""
Pydantic 모델 정의

실행 설정 (YAML 섹션), 리포트, 매니페스트, 파일 헤더 및 도구 응답 구조 정의
"""

import math
from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

# ============================================================
# 공통 상수 / 열거형
# ============================================================

# Sentinel-2 밴드 순서 (red, NIR, SWIR)
BAND_ORDER = ("B4", "B8", "B12")

LoraRole = Literal["qkv_fused", "attn_out", "mlp_fc1", "mlp_fc2", "patch_embed_1x1"]

# 블록 단위 역할 (patch_embed_1x1은 stem으로 따로 집계)
BLOCK_ROLES = ("qkv_fused", "attn_out", "mlp_fc1", "mlp_fc2")

DEFAULT_BIOMES = [
    "Boreal Forests/Taiga",
    "Tundra",
    "Temperate Conifer",
    "Temperate Broadleaf & Mixed",
    "Temperate Grasslands, Savannas & Shrublands",
    "Deserts & Xeric Shrublands",
    "Mediterranean Forests, Woodlands & Scrub",
    "Tropical & Subtropical Coniferous",
]


class Strategy(str, Enum):
    """적응 전략"""

    FULL_FT = "full_ft"
    DECODER_ONLY = "decoder_only"
    LORA = "lora"


class _Section(BaseModel):
    """설정 섹션 공통: 알 수 없는 키 거부"""

    model_config = ConfigDict(extra="forbid")


# ============================================================
# 모델 설정
# ============================================================


def default_selected_layers(depth: int) -> list[int]:
    """깊이 전체에 고르게 퍼진 4개 블록 인덱스 (마지막 블록 포함)"""
    return [max(0, math.ceil((k + 1) * depth / 4) - 1) for k in range(4)]


class ViTConfig(_Section):
    """Vision Transformer 인코더 구성"""

    img_size: int = Field(default=128, ge=1, description="입력 패치 크기 (픽셀)")
    patch: int = Field(default=16, ge=1, description="패치 크기 p")
    in_chans: int = Field(default=3, ge=1, description="입력 밴드 수")
    d_model: int = Field(default=64, ge=1, description="토큰 차원 D")
    depth: int = Field(default=4, ge=1, description="Transformer 블록 수")
    heads: int = Field(default=4, ge=1, description="어텐션 헤드 수")
    mlp_ratio: int = Field(default=4, ge=1, description="MLP 은닉 배율")
    use_cls_token: bool = Field(default=False, description="class 토큰 사용 여부")
    selected_layers: Optional[list[int]] = Field(
        default=None, description="특징을 추출할 블록 인덱스 4개 (없으면 균등 간격)"
    )
    dtype: Literal["float32", "float64"] = Field(default="float32", description="파라미터 dtype")

    @model_validator(mode="after")
    def _check_geometry(self) -> "ViTConfig":
        if self.img_size % self.patch:
            raise ValueError(f"patch {self.patch} does not divide img_size {self.img_size}")
        if self.grid_size % 2:
            raise ValueError(
                f"patch grid {self.grid_size}x{self.grid_size} must be even "
                "(the coarsest neck level halves it)"
            )
        if self.d_model % self.heads:
            raise ValueError(f"d_model {self.d_model} not divisible by heads {self.heads}")
        if self.selected_layers is None:
            self.selected_layers = default_selected_layers(self.depth)
        if len(self.selected_layers) != 4:
            raise ValueError(f"selected_layers needs exactly 4 entries, got {self.selected_layers}")
        if any(not 0 <= i < self.depth for i in self.selected_layers):
            raise ValueError(f"selected_layers {self.selected_layers} outside depth {self.depth}")
        return self

    @property
    def grid_size(self) -> int:
        return self.img_size // self.patch

    @property
    def num_patches(self) -> int:
        return self.grid_size**2


class HeadConfig(_Section):
    """피라미드 넥 / UPerNet 디코더 폭"""

    c_neck: int = Field(default=128, ge=1, description="넥 출력 채널 (스트림당)")
    c_dec: int = Field(default=128, ge=1, description="디코더 채널")
    pool_scales: list[int] = Field(default=[1, 2, 3, 6], description="PPM 풀링 격자")


class ModelConfig(_Section):
    """인코더-넥-디코더 전체 구성"""

    vit: ViTConfig = Field(default_factory=ViTConfig)
    head: HeadConfig = Field(default_factory=HeadConfig)


class LoraSpec(_Section):
    """LoRA 어댑터 설정"""

    rank: int = Field(default=8, ge=1, description="랭크 r")
    alpha: float = Field(default=1.0, ge=0.0, description="스케일 α (r로 나누지 않음)")
    targets: list[LoraRole] = Field(
        default=["qkv_fused", "attn_out"], description="어댑터를 붙일 투영 역할"
    )

    @field_validator("targets")
    @classmethod
    def _canonical_targets(cls, value: list[str]) -> list[str]:
        return sorted(set(value))


# ============================================================
# 학습 설정
# ============================================================


class ClassWeights(_Section):
    """클래스 가중치 (burned가 양성)"""

    w_burn: float = Field(default=3.0, gt=0.0, description="burned 픽셀 가중치")
    w_unburn: float = Field(default=1.0, gt=0.0, description="unburned 픽셀 가중치")


class TrainConfig(_Section):
    """학습 루프 설정"""

    lr: float = Field(default=1e-4, gt=0.0, description="Adam 학습률")
    batch_size: int = Field(default=2, ge=1, description="배치 크기")
    max_epochs: int = Field(default=10, ge=1, description="최대 epoch 수")
    max_steps: Optional[int] = Field(default=None, ge=1, description="최대 스텝 수 (우선 적용)")
    seed: int = Field(default=0, description="초기화 / 셔플 시드")
    strategy: Strategy = Field(default=Strategy.LORA, description="적응 전략")
    weights: ClassWeights = Field(default_factory=ClassWeights)
    loss_reduction: Literal["mean", "sum"] = Field(default="mean", description="픽셀 축소 방식")
    eval_every: int = Field(default=50, ge=1, description="검증 주기 (스텝)")
    log_every: int = Field(default=10, ge=1, description="로그 주기 (스텝)")
    val_fraction: float = Field(default=0.1, gt=0.0, lt=1.0, description="검증용 fire 비율")
    early_stop_patience: Optional[int] = Field(
        default=None, ge=1, description="개선 없는 검증 횟수 한도"
    )


# ============================================================
# 데이터 설정
# ============================================================


class QaThresholds(_Section):
    """장면 QA 필터 임계값"""

    cloud: float = Field(default=0.20, ge=0.0, le=1.0)
    snow: float = Field(default=0.20, ge=0.0, le=1.0)
    missing: float = Field(default=0.20, ge=0.0, le=1.0)
    min_area_ha: float = Field(default=100.0, ge=0.0, description="이 값보다 커야 통과")


class SplitSpec(_Section):
    """시공간 분할 규칙"""

    source_years: list[int] = Field(default=[2017, 2018, 2019, 2020])
    target_years: list[int] = Field(default=[2021, 2022, 2023])
    target_biomes: list[str] = Field(default=["Boreal Forests/Taiga", "Tundra"])
    mode: Literal["temporal", "biome", "combined"] = Field(default="combined")
    biome_vocabulary: list[str] = Field(default_factory=lambda: list(DEFAULT_BIOMES))

    @model_validator(mode="after")
    def _disjoint_years(self) -> "SplitSpec":
        overlap = set(self.source_years) & set(self.target_years)
        if overlap:
            raise ValueError(f"source and target years overlap: {sorted(overlap)}")
        unknown = set(self.target_biomes) - set(self.biome_vocabulary)
        if unknown:
            raise ValueError(f"target biomes not in vocabulary: {sorted(unknown)}")
        return self


class ScarParams(_Section):
    """합성 화재 흔적 생성 파라미터"""

    blobs_min: int = Field(default=1, ge=0)
    blobs_max: int = Field(default=4, ge=0)
    radius_min: float = Field(default=8.0, gt=0.0, description="blob 반경 하한 (픽셀)")
    radius_max: float = Field(default=24.0, gt=0.0, description="blob 반경 상한 (픽셀)")
    frac_min: float = Field(default=0.02, ge=0.0, le=1.0, description="scar 면적 비율 하한")
    frac_max: float = Field(default=0.45, ge=0.0, le=1.0, description="scar 면적 비율 상한")
    edge_roughness: float = Field(default=0.3, ge=0.0, lt=1.0, description="경계 요철 강도")
    background: list[float] = Field(default=[0.08, 0.30, 0.18], description="밴드별 기본 반사율")
    background_amp: float = Field(default=0.05, ge=0.0, description="배경 잡음 진폭")
    background_sigma: float = Field(default=6.0, gt=0.0, description="배경 평활화 sigma")
    delta: list[float] = Field(
        default=[0.03, -0.15, 0.12], description="scar 내부 post 밴드 변화 (B4, B8, B12)"
    )
    post_noise: float = Field(default=0.0, ge=0.0, description="post 전체 잡음 진폭")
    years: list[int] = Field(default=[2017, 2018, 2019, 2020, 2021, 2022, 2023])
    biomes: list[str] = Field(default_factory=lambda: list(DEFAULT_BIOMES))
    qa_max: float = Field(default=0.3, ge=0.0, le=1.0, description="QA 비율 추출 상한")
    area_ha_range: list[float] = Field(default=[50.0, 50000.0], description="화재 면적 범위")

    @model_validator(mode="after")
    def _ranges(self) -> "ScarParams":
        if self.blobs_min > self.blobs_max:
            raise ValueError("blobs_min > blobs_max")
        if self.radius_min > self.radius_max:
            raise ValueError("radius_min > radius_max")
        if self.frac_min > self.frac_max:
            raise ValueError("frac_min > frac_max")
        if len(self.background) != 3 or len(self.delta) != 3:
            raise ValueError("background and delta need one value per band")
        return self


class DataConfig(_Section):
    """데이터 경로 / 패치 / 정규화 설정"""

    scenes_dir: str = Field(default="data/scenes", description="BARC1 장면 디렉터리")
    manifest_path: str = Field(default="data/split.json", description="분할 매니페스트 경로")
    patch_size: int = Field(default=128, ge=1)
    patch_stride: int = Field(default=128, ge=1)
    band_mean: list[float] = Field(default=[0.08, 0.30, 0.18], description="밴드별 평균")
    band_std: list[float] = Field(default=[0.05, 0.08, 0.06], description="밴드별 표준편차")
    qa: QaThresholds = Field(default_factory=QaThresholds)
    split: SplitSpec = Field(default_factory=SplitSpec)
    synth: ScarParams = Field(default_factory=ScarParams)
    n_scenes: int = Field(default=64, ge=1, description="합성 장면 수")
    scene_size: int = Field(default=128, ge=1, description="합성 장면 한 변 (픽셀)")
    seed: int = Field(default=0, description="합성 데이터 시드")


class InferConfig(_Section):
    """슬라이딩 윈도우 추론 설정"""

    window: int = Field(default=128, ge=1)
    stride: int = Field(default=32, ge=1)
    workers: int = Field(default=1, ge=1, description="윈도우 병렬 추론 스레드 수")

    @model_validator(mode="after")
    def _stride_le_window(self) -> "InferConfig":
        if self.stride > self.window:
            raise ValueError(f"stride {self.stride} larger than window {self.window}")
        return self


class RunConfig(_Section):
    """실행 설정 파일 전체 (model, lora, data, train, infer 섹션)"""

    model: ModelConfig = Field(default_factory=ModelConfig)
    lora: LoraSpec = Field(default_factory=LoraSpec)
    data: DataConfig = Field(default_factory=DataConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    infer: InferConfig = Field(default_factory=InferConfig)
    output_dir: str = Field(default="runs", description="산출물 디렉터리")


# ============================================================
# 지표 / 리포트 모델
# ============================================================


class ConfusionCounts(BaseModel):
    """혼동 행렬 (burned = 양성)"""

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


class EvalReport(BaseModel):
    """분할/전략별 평가 결과"""

    split: str = Field(description="평가 분할 이름")
    strategy: Optional[str] = Field(default=None, description="적응 전략")
    n_scenes: int = Field(default=0, description="평가한 장면 수")
    counts: ConfusionCounts = Field(description="전체 (micro) 혼동 행렬")
    iou: float = Field(description="IoU")
    f1: float = Field(description="F1")


class ParamReport(BaseModel):
    """인코더 또는 전체 네트워크 기준 파라미터 집계"""

    scope: Literal["encoder_only", "full_network"] = Field(description="집계 범위")
    total: int = Field(description="전체 파라미터 수")
    trainable: int = Field(description="학습 가능 파라미터 수")

    @computed_field
    @property
    def percent(self) -> float:
        """학습 가능 비율 (%)"""
        return 100.0 * self.trainable / self.total if self.total else 0.0


class LoraCount(BaseModel):
    """어댑터 파라미터 집계"""

    per_block: list[int] = Field(description="블록별 어댑터 파라미터 수")
    stem: int = Field(default=0, description="패치 임베딩 어댑터 파라미터 수")

    @computed_field
    @property
    def total(self) -> int:
        return sum(self.per_block) + self.stem


class HistoryEntry(BaseModel):
    """학습 기록 한 줄"""

    step: int
    loss: float
    val_iou: Optional[float] = None


class QaDecision(BaseModel):
    """QA 필터 판정"""

    accepted: bool
    reason: Optional[Literal["cloud", "snow", "missing", "area"]] = None


class ManifestEntry(BaseModel):
    fire_id: str
    partition: Literal["train", "test", "rejected"]
    year: int
    biome: str
    reason: Optional[str] = Field(default=None, description="rejected일 때 사유")


class SplitManifest(BaseModel):
    """분할 매니페스트 (fire_id 순)"""

    mode: str
    entries: list[ManifestEntry] = Field(default_factory=list)

    def fire_ids(self, partition: str) -> list[str]:
        return [e.fire_id for e in self.entries if e.partition == partition]


# ============================================================
# 파일 헤더
# ============================================================


class QaFractions(BaseModel):
    cloud_frac: float = Field(default=0.0, ge=0.0, le=1.0)
    snow_frac: float = Field(default=0.0, ge=0.0, le=1.0)
    missing_frac: float = Field(default=0.0, ge=0.0, le=1.0)


class SceneHeader(BaseModel):
    """BARC1 장면 헤더"""

    model_config = ConfigDict(extra="forbid")

    magic: Literal["BARC1"] = "BARC1"
    fire_id: str
    year: int
    biome: str
    area_ha: float = Field(gt=0.0)
    bands: list[str] = Field(default_factory=lambda: list(BAND_ORDER))
    qa: QaFractions = Field(default_factory=QaFractions)


class TrainProgress(BaseModel):
    """재개 위치: 다음 배치의 epoch / 순열 내 위치와 early stop 상태"""

    model_config = ConfigDict(extra="forbid")

    epoch: int = Field(default=0, ge=0)
    batch_offset: int = Field(default=0, ge=0, description="epoch 순열에서 다음 배치 시작 위치")
    best_step: int = Field(default=0, ge=0)
    stale: int = Field(default=0, ge=0, description="개선 없이 지난 검증 횟수")


class CheckpointHeader(BaseModel):
    """체크포인트 헤더"""

    model_config = ConfigDict(extra="forbid")

    version: int = 1
    kind: Literal["full", "adapters"] = "full"
    strategy: Strategy = Strategy.LORA
    step: int = 0
    best_val_iou: Optional[float] = None
    config_hash: str
    adam_t: int = 0
    progress: TrainProgress = Field(default_factory=TrainProgress)
    param_names: list[str] = Field(default_factory=list)
    trainable: list[str] = Field(default_factory=list)


# ============================================================
# 도구 응답 모델
# ============================================================


class SynthgenResult(BaseModel):
    """synthgen 결과"""

    scenes_dir: str
    n_scenes: int
    fire_ids: list[str]


class SplitResult(BaseModel):
    """split 결과"""

    manifest_path: str
    mode: str
    n_train: int
    n_test: int
    n_rejected: int


class TrainResult(BaseModel):
    """train 결과"""

    checkpoint_path: str
    last_checkpoint_path: str = Field(description="재개용 (마지막 스텝) 체크포인트")
    history_path: str
    adapters_path: Optional[str] = None
    strategy: str
    steps: int
    best_val_iou: Optional[float]
    final_loss: Optional[float]
    params: list[ParamReport]


class InferResult(BaseModel):
    """infer 결과"""

    fire_id: str
    mask_path: str
    error_map_path: Optional[str]
    counts: Optional[ConfusionCounts]
    windows: int


class ParamsResult(BaseModel):
    """params 결과"""

    reports: list[ParamReport]
    lora: Optional[LoraCount]
    lines: list[str] = Field(description="사람이 읽는 요약 줄")
