"""
예외 정의

패키지 전체에서 사용하는 예외 계층. CLI는 예외 종류별로 종료 코드를 매핑합니다.
"""


class BurnScarError(Exception):
    """패키지 공통 최상위 예외"""

    kind = "internal"


class DimensionError(BurnScarError, ValueError):
    """텐서 shape / 축 불일치"""

    kind = "dimension"


class ContractError(BurnScarError):
    """API 사용 계약 위반 (스칼라가 아닌 grad_check 대상, param/grad shape 불일치 등)"""

    kind = "contract"


class ConfigurationError(BurnScarError, ValueError):
    """잘못된 설정값"""

    kind = "config"


class DataError(BurnScarError, ValueError):
    """입력 데이터 오류 (라벨 값, 폴리곤, biome 등)"""

    kind = "data"


class FormatError(BurnScarError):
    """바이너리 컨테이너 파싱 실패"""

    kind = "format"

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)


class NonFiniteError(BurnScarError, FloatingPointError):
    """연산 결과에 NaN/Inf 발생"""

    kind = "non_finite"


class TrainingDivergedError(BurnScarError):
    """학습 중 loss가 유한하지 않음"""

    kind = "diverged"

    def __init__(self, step: int, loss: float, fire_ids: list[str]):
        self.step = step
        self.loss = loss
        self.fire_ids = list(fire_ids)
        super().__init__(
            f"non-finite loss {loss!r} at step {step}; batch fire_ids={self.fire_ids}"
        )


class CheckpointMismatchError(BurnScarError):
    """체크포인트의 config hash가 현재 모델과 다름"""

    kind = "checkpoint_mismatch"


class CoverageError(BurnScarError, AssertionError):
    """슬라이딩 윈도우가 덮지 못한 픽셀이 존재 (내부 불변식 위반)"""

    kind = "coverage"


class UsageError(BurnScarError):
    """명령행 사용법 오류 (알 수 없는 옵션 / 하위 명령)"""

    kind = "usage"
