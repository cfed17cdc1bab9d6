"""Общий JSON-формат матриц: список строк, элемент - пара [re, im]."""
from typing import List, Sequence

import numpy as np

from dof.exceptions import InvalidInputError


def matrix_to_json(a: np.ndarray) -> List[List[List[float]]]:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(data: Sequence, rows: int, cols: int) -> np.ndarray:
    """
    Восстанавливает матрицу rows x cols. Форма передаётся явно, иначе
    пустые матрицы (0 строк или 0 столбцов) не восстановить.
    """
    if len(data) != rows:
        raise InvalidInputError(f'expected {rows} rows, got {len(data)}')
    out = np.zeros((rows, cols), dtype=complex)
    for r, row in enumerate(data):
        if len(row) != cols:
            raise InvalidInputError(f'row {r}: expected {cols} entries, got {len(row)}')
        for c, pair in enumerate(row):
            if len(pair) != 2:
                raise InvalidInputError(f'entry ({r}, {c}) must be a [re, im] pair')
            out[r, c] = complex(float(pair[0]), float(pair[1]))
    return out
