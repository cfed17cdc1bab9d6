"""
Воспроизводимые случайные потоки.

Каждый потребитель случайности получает собственный поток, выведенный из
(seed, ключи...), поэтому результат не зависит от порядка генерации.
"""
import zlib
from typing import List, Tuple, Union

import numpy as np

from dof.exceptions import InvalidInputError

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise InvalidInputError(f'seed keys must be non-negative, got {key}')
        return int(key)
    return zlib.crc32(str(key).encode('utf-8'))


def substream(seed: int, *keys: Key) -> np.random.Generator:
    """Генератор PCG64 для пары (seed, keys)."""
    entropy = [_key_to_int(seed)] + [_key_to_int(key) for key in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def complex_gaussian(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Комплексный гауссовский массив единичной дисперсии, Re и Im независимы."""
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return (real + 1j * imag) / np.sqrt(2.0)


def unit_circle_symbols(rng: np.random.Generator, count: int) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=count))


def trial_seeds(seed: int, trials: int) -> List[int]:
    """Под-seed'ы независимых прогонов Монте-Карло: i-й зависит только от (seed, i)."""
    root = np.random.SeedSequence(_key_to_int(seed))
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in root.spawn(trials)]
