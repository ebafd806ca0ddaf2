"""
로깅 설정
"""

import logging
import os

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(level: str | None = None) -> None:
    """
    루트 로거에 스트림 핸들러 하나를 설정합니다.

    Args:
        level: 로그 레벨 이름 (없으면 BURNSCAR_LOG_LEVEL, 기본값 INFO)
    """
    level_name = (level or os.getenv("BURNSCAR_LOG_LEVEL", "INFO")).upper()
    root = logging.getLogger()
    # 중복 핸들러 방지
    for handler in list(root.handlers):
        if getattr(handler, "_burnscar", False):
            root.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
    handler._burnscar = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    root.setLevel(getattr(logging, level_name, logging.INFO))
