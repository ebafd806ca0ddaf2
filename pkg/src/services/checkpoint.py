"""
체크포인트 / 어댑터 파일

BCKP1 컨테이너: 헤더 (버전, 단계, best_val_iou, config hash, Adam t, 재개 위치)
+ 파라미터 블록 + Adam 모멘트 블록.
BADP1 컨테이너: 어댑터 텐서만 (하나의 고정 인코더에 지역별 어댑터 교체용).
"""

import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.models.schemas import CheckpointHeader, TrainProgress
from src.nn.lora import export_adapters, import_adapters
from src.nn.optim import AdamState
from src.services.assembly import ModelAssembly, config_hash
from src.utils.container import decode, encode
from src.utils.errors import CheckpointMismatchError, ConfigurationError, FormatError

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"BCKP1"
ADAPTER_MAGIC = b"BADP1"
CHECKPOINT_VERSION = 1

_PARAM = "param/"
_ADAM_M = "adam_m/"
_ADAM_V = "adam_v/"
_ADAPTER = "adapter/"


def assembly_hash(assembly: ModelAssembly) -> str:
    return config_hash(assembly.config, assembly.lora_spec, assembly.strategy)


def checkpoint_bytes(
    assembly: ModelAssembly,
    state: AdamState | None = None,
    step: int = 0,
    best_val_iou: float | None = None,
    progress: TrainProgress | None = None,
) -> bytes:
    named = list(assembly.named_parameters())
    state = state or AdamState()
    header = CheckpointHeader(
        version=CHECKPOINT_VERSION,
        kind="full",
        strategy=assembly.strategy,
        step=step,
        best_val_iou=best_val_iou,
        config_hash=assembly_hash(assembly),
        adam_t=state.t,
        progress=progress or TrainProgress(best_step=step),
        param_names=[name for name, _ in named],
        trainable=[name for name, p in named if p.trainable],
    )
    blocks = [(_PARAM + name, p.data) for name, p in named]
    for key in sorted(state.m):
        blocks.append((_ADAM_M + key, state.m[key]))
        blocks.append((_ADAM_V + key, state.v[key]))
    return encode(CHECKPOINT_MAGIC, header.model_dump(mode="json"), blocks)


def save_checkpoint(
    path: str | Path,
    assembly: ModelAssembly,
    state: AdamState | None = None,
    step: int = 0,
    best_val_iou: float | None = None,
    progress: TrainProgress | None = None,
) -> Path:
    """
    모델 파라미터와 옵티마이저 상태를 저장합니다.

    Args:
        path: 저장 경로
        assembly: 모델
        state: Adam 상태 (없으면 빈 상태)
        step: 학습 스텝
        best_val_iou: 최고 검증 IoU
        progress: 재개 위치 (없으면 epoch 0 처음부터)

    Returns:
        저장 경로
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(assembly, state, step, best_val_iou, progress))
    logger.info("Saved checkpoint to %s (step %d)", path, step)
    return path


def _parse_header(
    magic: bytes, payload: bytes
) -> tuple[CheckpointHeader, dict[str, np.ndarray]]:
    fields, arrays = decode(magic, payload)
    try:
        header = CheckpointHeader(**fields)
    except ValidationError as exc:
        message = exc.errors()[0]["msg"]
        raise FormatError(f"invalid checkpoint header: {message}", offset=len(magic) + 1) from exc
    if header.version != CHECKPOINT_VERSION:
        raise FormatError(
            f"unsupported checkpoint version {header.version} (expected {CHECKPOINT_VERSION})",
            offset=len(magic) + 1,
        )
    return header, arrays


def _check_hash(header: CheckpointHeader, assembly: ModelAssembly, force: bool, path) -> None:
    expected = assembly_hash(assembly)
    if header.config_hash == expected:
        return
    message = (
        f"{path}: config hash {header.config_hash[:12]} does not match "
        f"the current model ({expected[:12]})"
    )
    if not force:
        raise CheckpointMismatchError(message)
    logger.warning("%s; loading anyway (forced)", message)


def load_checkpoint(
    path: str | Path,
    assembly: ModelAssembly,
    force: bool = False,
) -> tuple[CheckpointHeader, AdamState]:
    """
    체크포인트를 모델에 적재합니다.

    Args:
        path: 체크포인트 경로
        assembly: 같은 구조로 만든 모델
        force: config hash가 달라도 적재

    Returns:
        (헤더, Adam 상태)
    """
    path = Path(path)
    header, arrays = _parse_header(CHECKPOINT_MAGIC, path.read_bytes())
    if header.kind != "full":
        raise FormatError(f"{path} is an adapter file, not a full checkpoint")
    _check_hash(header, assembly, force, path)

    params = {k[len(_PARAM):]: v for k, v in arrays.items() if k.startswith(_PARAM)}
    if list(params) != header.param_names:
        raise FormatError(f"{path}: parameter blocks disagree with the header name list")
    try:
        assembly.load_state_dict(params)
    except ConfigurationError as exc:
        raise CheckpointMismatchError(f"{path}: {exc}") from exc

    state = AdamState(t=header.adam_t)
    for key, value in arrays.items():
        if key.startswith(_ADAM_M):
            state.m[key[len(_ADAM_M):]] = value
        elif key.startswith(_ADAM_V):
            state.v[key[len(_ADAM_V):]] = value
    if set(state.m) != set(state.v):
        raise FormatError(f"{path}: optimizer moment blocks are unpaired")
    logger.info("Loaded checkpoint %s (step %d)", path, header.step)
    return header, state


def save_adapters(path: str | Path, assembly: ModelAssembly) -> Path:
    """어댑터 텐서만 저장"""
    state = export_adapters(assembly)
    header = CheckpointHeader(
        kind="adapters",
        strategy=assembly.strategy,
        config_hash=assembly_hash(assembly),
        param_names=list(state),
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blocks = [(_ADAPTER + name, value) for name, value in state.items()]
    path.write_bytes(encode(ADAPTER_MAGIC, header.model_dump(mode="json"), blocks))
    logger.info("Saved %d adapter tensors to %s", len(state), path)
    return path


def load_adapters(path: str | Path, assembly: ModelAssembly, force: bool = False) -> None:
    """save_adapters 파일을 같은 구조의 모델에 적재"""
    path = Path(path)
    header, arrays = _parse_header(ADAPTER_MAGIC, path.read_bytes())
    if header.kind != "adapters":
        raise FormatError(f"{path} is not an adapter file")
    _check_hash(header, assembly, force, path)
    import_adapters(assembly, {k[len(_ADAPTER):]: v for k, v in arrays.items()})


def read_checkpoint_header(path: str | Path) -> CheckpointHeader:
    """모델을 만들기 전에 전략 / 단계를 확인할 때 사용"""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    header, _ = _parse_header(CHECKPOINT_MAGIC, path.read_bytes())
    return header
