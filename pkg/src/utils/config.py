"""
실행 설정 로드

YAML 파일 (model / lora / data / train / infer 섹션) + `section.key=value` 덮어쓰기 → RunConfig
"""

import logging
import math
import os
from pathlib import Path
from typing import Any, Iterable

import yaml
from pydantic import ValidationError

from src.models.schemas import RunConfig
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

CONFIG_ENV = "BURNSCAR_CONFIG"


def parse_override(item: str) -> tuple[list[str], Any]:
    """
    `train.lr=0.001` 형식을 (키 경로, 값)으로 나눕니다.

    값은 YAML 스칼라/리스트로 해석합니다 (예: `[1, 2]`, `true`, `1e-4`).
    """
    key, sep, raw = item.partition("=")
    path = [part for part in key.strip().split(".") if part]
    if not sep or not path:
        raise ConfigurationError(f"override {item!r} must look like section.key=value")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"override {item!r}: value is not valid YAML") from exc
    # PyYAML은 1e-4 같은 지수 표기를 문자열로 읽음
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigurationError(f"override {item!r}: value must be a finite number")
    return path, value


def apply_overrides(raw: dict[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    """덮어쓰기를 원본 dict에 적용 (중간 섹션이 없으면 생성)"""
    for item in overrides:
        path, value = parse_override(item)
        node = raw
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigurationError(f"override {item!r}: {part!r} is not a section")
            node = child
        node[path[-1]] = value
    return raw


def _read_yaml(path: Path) -> dict[str, Any]:
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path} is not valid YAML: {exc}") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping of sections")
    return raw


def load_run_config(
    path: str | Path | None = None, overrides: Iterable[str] = ()
) -> RunConfig:
    """
    실행 설정을 읽고 검증합니다.

    Args:
        path: YAML 경로 (없으면 BURNSCAR_CONFIG, 그것도 없으면 기본값)
        overrides: `section.key=value` 목록

    Returns:
        RunConfig
    """
    path = path or os.getenv(CONFIG_ENV)
    raw = _read_yaml(Path(path)) if path else {}
    raw = apply_overrides(raw, overrides)
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigurationError(
            f"invalid run config ({exc.error_count()} errors): {where}: {first['msg']}"
        ) from exc
    logger.debug("Loaded run config from %s", path or "defaults")
    return config
