"""
명령행 인터페이스

하위 명령: synthgen, split, train, eval, infer, params, serve
성공하면 결과를 stdout에 출력하고 0을 반환합니다. 실패하면 stderr에 JSON 한 줄
{"error", "exit_code", "message"}을 쓰고 예외 종류별 종료 코드를 반환합니다.
"""

import argparse
import json
import logging
import sys
from typing import Callable, Optional, Sequence

from dotenv import load_dotenv
from pydantic import BaseModel

from src import tools
from src.utils.errors import (
    BurnScarError,
    CheckpointMismatchError,
    ConfigurationError,
    DataError,
    DimensionError,
    FormatError,
    TrainingDivergedError,
    UsageError,
)
from src.utils.logging_setup import setup_logging

logger = logging.getLogger(__name__)

# ============================================================
# 종료 코드
# ============================================================

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_CONFIG = 4
EXIT_DATA = 5
EXIT_CHECKPOINT = 6
EXIT_DIVERGED = 7

# 먼저 일치하는 항목 사용
EXIT_CODES: list[tuple[type[BaseException], int]] = [
    (UsageError, EXIT_USAGE),
    (FileNotFoundError, EXIT_MISSING_FILE),
    (CheckpointMismatchError, EXIT_CHECKPOINT),
    (TrainingDivergedError, EXIT_DIVERGED),
    (ConfigurationError, EXIT_CONFIG),
    (DataError, EXIT_DATA),
    (FormatError, EXIT_DATA),
    (DimensionError, EXIT_DATA),
]


def exit_code_for(exc: BaseException) -> int:
    for kind, code in EXIT_CODES:
        if isinstance(exc, kind):
            return code
    return EXIT_INTERNAL


def error_line(exc: BaseException) -> str:
    """stderr로 내보내는 기계 판독용 오류 한 줄"""
    if isinstance(exc, BurnScarError):
        kind = exc.kind
    elif isinstance(exc, FileNotFoundError):
        kind = "missing_file"
    else:
        kind = "internal"
    payload = {"error": kind, "exit_code": exit_code_for(exc), "message": str(exc)}
    return json.dumps(payload, ensure_ascii=False)


class CliParser(argparse.ArgumentParser):
    """argparse 오류를 SystemExit 대신 UsageError로 올립니다."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# ============================================================
# 하위 명령
# ============================================================


def _overrides(args: argparse.Namespace) -> list[str]:
    items = list(args.overrides or [])
    if args.seed is not None:
        items += [f"train.seed={args.seed}", f"data.seed={args.seed}"]
    return items


def _cmd_synthgen(args: argparse.Namespace) -> BaseModel:
    return tools.synthgen(config_path=args.config, overrides=_overrides(args), out_dir=args.out)


def _cmd_split(args: argparse.Namespace) -> BaseModel:
    return tools.split(
        config_path=args.config,
        overrides=_overrides(args),
        scenes_dir=args.scenes,
        manifest_path=args.out,
    )


def _cmd_train(args: argparse.Namespace) -> BaseModel:
    return tools.train(
        config_path=args.config,
        overrides=_overrides(args),
        strategy=args.strategy,
        out_dir=args.out,
        resume=args.resume,
        force=args.force,
    )


def _cmd_eval(args: argparse.Namespace) -> BaseModel:
    return tools.evaluate(
        config_path=args.config,
        overrides=_overrides(args),
        partition=args.partition,
        checkpoint=args.checkpoint,
        predictions_dir=args.predictions,
        force=args.force,
    )


def _cmd_infer(args: argparse.Namespace) -> BaseModel:
    return tools.infer(
        scene_path=args.scene,
        checkpoint=args.checkpoint,
        config_path=args.config,
        overrides=_overrides(args),
        out_dir=args.out,
        error_map=not args.no_error_map,
        force=args.force,
    )


def _cmd_params(args: argparse.Namespace) -> BaseModel:
    return tools.params(
        config_path=args.config, overrides=_overrides(args), strategy=args.strategy
    )


def _cmd_serve(args: argparse.Namespace) -> None:
    from src.server import main as serve

    serve()


def build_parser() -> CliParser:
    parser = CliParser(prog="burnscar", description="Bi-temporal burned-area segmentation")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (기본값: INFO)")

    common = CliParser(add_help=False)
    common.add_argument("-c", "--config", default=None, help="실행 설정 YAML")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        metavar="SECTION.KEY=VALUE",
        help="설정 덮어쓰기 (반복 가능)",
    )
    common.add_argument("--seed", type=int, default=None, help="train.seed와 data.seed 덮어쓰기")
    common.add_argument("--json", action="store_true", help="결과를 JSON으로 출력")

    strategies = ["full_ft", "decoder_only", "lora"]
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("synthgen", parents=[common], help="합성 장면 생성")
    p.add_argument("--out", default=None, help="장면 디렉터리")
    p.set_defaults(handler=_cmd_synthgen)

    p = sub.add_parser("split", parents=[common], help="QA 필터 + 분할 매니페스트")
    p.add_argument("--scenes", default=None, help="장면 디렉터리")
    p.add_argument("--out", default=None, help="매니페스트 경로")
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("train", parents=[common], help="학습")
    p.add_argument("--strategy", choices=strategies, default=None)
    p.add_argument("--out", default=None, help="산출물 디렉터리")
    p.add_argument(
        "--resume", default=None, help="이어서 학습할 체크포인트 (보통 last.bckp)"
    )
    p.add_argument("--force", action="store_true", help="config hash 불일치 무시")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("eval", parents=[common], help="IoU / F1 평가")
    p.add_argument("--partition", choices=["train", "test", "all"], default="test")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--checkpoint", default=None)
    source.add_argument("--predictions", default=None, help="<fire_id>.npy 마스크 디렉터리")
    p.add_argument("--force", action="store_true", help="config hash 불일치 무시")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("infer", parents=[common], help="장면 추론 + 오류 지도")
    p.add_argument("scene", help="BARC1 장면 파일")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=None, help="출력 디렉터리")
    p.add_argument("--no-error-map", action="store_true")
    p.add_argument("--force", action="store_true", help="config hash 불일치 무시")
    p.set_defaults(handler=_cmd_infer)

    p = sub.add_parser(
        "params",
        parents=[common],
        help="파라미터 집계",
        description="비율의 분모는 어댑터를 포함한 인코더 전체 (cls 토큰 / 분류 헤드 없음)",
    )
    p.add_argument("--strategy", choices=strategies, default=None)
    p.set_defaults(handler=_cmd_params)

    p = sub.add_parser("serve", help="MCP 도구 서버 실행")
    p.set_defaults(handler=_cmd_serve, json=False)
    return parser


def _emit(result: BaseModel | None, as_json: bool) -> None:
    if result is None:
        return
    lines = getattr(result, "lines", None)
    if lines and not as_json:
        print("\n".join(lines))
    else:
        print(result.model_dump_json(indent=2))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    명령행 진입점

    Args:
        argv: 인자 목록 (없으면 sys.argv[1:])

    Returns:
        종료 코드
    """
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.log_level)
        handler: Callable[[argparse.Namespace], BaseModel | None] = args.handler
        _emit(handler(args), args.json)
    except SystemExit as exc:
        # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except Exception as exc:
        code = exit_code_for(exc)
        if code == EXIT_INTERNAL:
            logger.exception("Unexpected error")
        print(error_line(exc), file=sys.stderr, flush=True)
        return code
    return EXIT_OK
