"""
결정적 난수 생성기

numpy PCG64 + SeedSequence. (seed, key) 쌍이 같으면 실행/플랫폼과 무관하게 같은 값을 뽑습니다.
"""

import numpy as np

ALGORITHM = "PCG64"


class Rng:
    """
    시드 고정 난수 생성기

    child()는 호출 순서대로 번호가 붙은 독립 스트림을 만들고,
    derive(*key)는 호출 순서와 무관하게 key만으로 정해지는 스트림을 만듭니다.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        self.key = tuple(int(k) for k in key)
        self.algorithm = ALGORITHM
        sequence = np.random.SeedSequence([self.seed, *self.key])
        self._generator = np.random.Generator(np.random.PCG64(sequence))
        self._children = 0

    def child(self) -> "Rng":
        self._children += 1
        return Rng(self.seed, self.key + (self._children,))

    def derive(self, *key: int) -> "Rng":
        return Rng(self.seed, self.key + (0,) + tuple(key))

    def normal(self, shape, dtype=np.float32, scale: float = 1.0) -> np.ndarray:
        draw = self._generator.standard_normal(size=shape, dtype=np.dtype(dtype).type)
        return draw * np.asarray(scale, dtype=dtype)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._generator.uniform(low, high, size=size)

    def integers(self, low: int, high: int, size=None):
        return self._generator.integers(low, high, size=size)

    def choice(self, population, size=None, replace: bool = True):
        return self._generator.choice(population, size=size, replace=replace)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)
