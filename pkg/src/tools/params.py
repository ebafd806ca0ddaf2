"""
params Tool

전략별 파라미터 집계 (encoder_only / full_network)와 LoRA 어댑터 수
"""

from typing import Optional

from pydantic import Field

from src.models.schemas import ParamsResult, Strategy
from src.nn.lora import count_lora_params
from src.services.assembly import (
    assembly_from_config,
    format_param_report,
    param_report,
    summary_line,
)
from src.utils.config import load_run_config


def params(
    config_path: Optional[str] = Field(
        default=None,
        description="실행 설정 YAML 경로 (예: configs/vit_b_lora.yaml)",
    ),
    overrides: Optional[list[str]] = Field(
        default=None,
        description="설정 덮어쓰기 (예: lora.rank=4)",
    ),
    strategy: Optional[str] = Field(
        default=None,
        description="적응 전략: full_ft, decoder_only, lora (기본값: train.strategy)",
    ),
) -> ParamsResult:
    """
    모델을 구성하고 (가중치는 만들지 않음) 학습 가능 파라미터 수를 집계합니다.

    Args:
        config_path: 실행 설정 경로
        overrides: 설정 덮어쓰기
        strategy: 적응 전략

    Returns:
        ParamsResult: 범위별 집계, 어댑터 수, 출력 줄
    """
    config = load_run_config(config_path, overrides or [])
    assembly = assembly_from_config(config, strategy)
    reports = [param_report(assembly, "encoder_only"), param_report(assembly, "full_network")]

    lines = []
    for report in reports:
        lines.append(summary_line(report))
        lines.extend(f"  {line}" for line in format_param_report(report))

    lora = None
    if assembly.strategy is Strategy.LORA:
        lora = count_lora_params(assembly.encoder)
        lines.append(
            f"lora: per block {lora.per_block[0] if lora.per_block else 0:,} "
            f"x {len(lora.per_block)} blocks, stem {lora.stem:,}, total {lora.total:,}"
        )
    return ParamsResult(reports=reports, lora=lora, lines=lines)
