"""
합성 화재 흔적 장면 생성기

배경 반사율은 평활화한 잡음, 화재 흔적은 경계가 거친 타원 blob들의 합집합.
흔적 내부의 post 밴드는 고정 변화량만큼 이동합니다 (B8 감소, B12 증가 = dNBR 반응).
같은 (seed, 장면 번호)는 항상 같은 장면을 만듭니다.
"""

import logging
import math

import numpy as np
from scipy import ndimage

from src.data.scene import RasterScene
from src.models.schemas import QaFractions, ScarParams
from src.nn.rng import Rng
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

# blob 배치 시도 한도 (blob 하나당)
ATTEMPTS_PER_BLOB = 25


def _smooth_field(rng: Rng, height: int, width: int, sigma: float) -> np.ndarray:
    """평균 0, 표준편차 1의 공간 상관 잡음"""
    field = ndimage.gaussian_filter(rng.normal((height, width), np.float64), sigma, mode="wrap")
    std = field.std()
    return (field - field.mean()) / std if std > 0 else field


def _blob(rng: Rng, height: int, width: int, params: ScarParams) -> np.ndarray:
    cy = rng.uniform(0, height)
    cx = rng.uniform(0, width)
    ry = rng.uniform(params.radius_min, params.radius_max)
    rx = rng.uniform(params.radius_min, params.radius_max)
    theta = rng.uniform(0, math.pi)

    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64) + 0.5
    dy, dx = rows - cy, cols - cx
    u = dx * math.cos(theta) + dy * math.sin(theta)
    v = -dx * math.sin(theta) + dy * math.cos(theta)
    dist = np.sqrt((u / rx) ** 2 + (v / ry) ** 2)

    rough = np.clip(_smooth_field(rng, height, width, params.radius_min / 2), -1.0, 1.0)
    return dist < 1.0 + params.edge_roughness * rough


def _scar_mask(rng: Rng, height: int, width: int, params: ScarParams) -> np.ndarray:
    n_blobs = int(rng.integers(params.blobs_min, params.blobs_max + 1))
    mask = np.zeros((height, width), dtype=bool)
    if n_blobs == 0:
        return mask

    placed = 0
    for _ in range(ATTEMPTS_PER_BLOB * max(n_blobs, 1)):
        frac = mask.mean()
        if placed >= n_blobs and frac >= params.frac_min:
            break
        candidate = mask | _blob(rng, height, width, params)
        if candidate.mean() <= params.frac_max and candidate.sum() > mask.sum():
            mask = candidate
            placed += 1

    if mask.mean() < params.frac_min:
        raise ConfigurationError(
            f"could not reach scar fraction {params.frac_min} with radius "
            f"[{params.radius_min}, {params.radius_max}] on a {height}×{width} scene"
        )
    return mask


def synth_scene(rng: Rng, index: int, height: int, width: int, params: ScarParams) -> RasterScene:
    """index번째 합성 장면 (rng.derive(index) 스트림 사용)"""
    srng = rng.derive(index)

    pre = np.empty((3, height, width), dtype=np.float64)
    for band, base in enumerate(params.background):
        noise = _smooth_field(srng, height, width, params.background_sigma)
        pre[band] = base + params.background_amp * noise
    pre = np.clip(pre, 0.0, 1.0)

    mask = _scar_mask(srng, height, width, params)
    delta = np.asarray(params.delta, dtype=np.float64)[:, None, None]
    post = pre + delta * mask[None]
    if params.post_noise > 0:
        post = post + params.post_noise * srng.normal((3, height, width), np.float64)
    post = np.clip(post, 0.0, 1.0)

    low, high = params.area_ha_range
    area = math.exp(srng.uniform(math.log(low), math.log(high)))
    qa = QaFractions(
        cloud_frac=float(srng.uniform(0.0, params.qa_max)),
        snow_frac=float(srng.uniform(0.0, params.qa_max)),
        missing_frac=float(srng.uniform(0.0, params.qa_max)),
    )
    return RasterScene(
        fire_id=f"SYN{rng.seed}-{index:04d}",
        year=int(srng.choice(params.years)),
        biome=str(srng.choice(params.biomes)),
        pre=pre.astype(np.float32),
        post=post.astype(np.float32),
        mask=mask.astype(np.uint8),
        area_ha=round(area, 2),
        qa=qa,
    )


def synth_generate(
    rng: Rng, n_scenes: int, height: int, width: int, params: ScarParams | None = None
) -> list[RasterScene]:
    """
    합성 장면 n개를 생성합니다.

    Args:
        rng: 시드 고정 난수 생성기
        n_scenes: 장면 수
        height, width: 장면 크기
        params: blob 수/크기, 면적 비율 범위, 분광 변화량

    Returns:
        RasterScene 목록 (fire_id 순)
    """
    params = params or ScarParams()
    if 2 * params.radius_max > min(height, width):
        raise ConfigurationError(
            f"blob diameter {2 * params.radius_max} exceeds scene size {height}×{width}"
        )
    if n_scenes < 0:
        raise ConfigurationError(f"n_scenes must be >= 0, got {n_scenes}")
    scenes = [synth_scene(rng, i, height, width, params) for i in range(n_scenes)]
    logger.info("Generated %d synthetic scenes (%d×%d, seed %d)", n_scenes, height, width, rng.seed)
    return scenes
