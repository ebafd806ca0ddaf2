"""
장면 QA 필터

구름 / 눈 / 결측 비율이 각각 임계값 이하이고 화재 면적이 min_area_ha 초과인 장면만 통과
"""

from src.data.scene import RasterScene
from src.models.schemas import QaDecision, QaThresholds


def qa_filter(scene: RasterScene, thresholds: QaThresholds | None = None) -> QaDecision:
    """
    장면 하나를 판정합니다. 첫 번째로 위반한 항목이 reason이 됩니다.

    Args:
        scene: 장면
        thresholds: 임계값 (기본 0.20 / 0.20 / 0.20, 100 ha)

    Returns:
        QaDecision
    """
    thresholds = thresholds or QaThresholds()
    if scene.qa.cloud_frac > thresholds.cloud:
        return QaDecision(accepted=False, reason="cloud")
    if scene.qa.snow_frac > thresholds.snow:
        return QaDecision(accepted=False, reason="snow")
    if scene.qa.missing_frac > thresholds.missing:
        return QaDecision(accepted=False, reason="missing")
    if not scene.area_ha > thresholds.min_area_ha:
        return QaDecision(accepted=False, reason="area")
    return QaDecision(accepted=True)
