"""
Алгебра подпространств комплексных матриц.

Единственный ранговый примитив - SVD (scipy.linalg). Базисы ортонормальны,
но в остальном произвольны: всё, что проверяется дальше, проверяется через
ранги и вложенность span, а не поэлементно.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from dof.constants import CONTAINMENT_TOL, ORTHONORMAL_TOL, RANK_TOL_HEADROOM
from dof.exceptions import InvalidInputError, PreconditionError


def as_matrix(a, name: str = 'matrix') -> np.ndarray:
    """Приводит вход к двумерному complex-массиву и проверяет конечность элементов."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise InvalidInputError(f'{name}: expected a 2-D array, got shape {arr.shape}')
    arr = arr.astype(complex, copy=False)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f'{name}: non-finite entries')
    return arr


def default_tol(shape: Tuple[int, int]) -> float:
    return max(shape[0], shape[1], 1) * np.finfo(float).eps * RANK_TOL_HEADROOM


def singular_values(a) -> np.ndarray:
    a = as_matrix(a)
    if a.size == 0:
        return np.zeros(0)
    return linalg.svdvals(a)


def _rank_from_singular_values(s: np.ndarray, tol: float, reference: Optional[float] = None) -> int:
    if s.size == 0:
        return 0
    level = max(float(s[0]), reference or 0.0)
    if level == 0:
        return 0
    return int(np.count_nonzero(s > tol * level))


def numerical_rank(a, tol: Optional[float] = None, reference: Optional[float] = None) -> int:
    """
    Число сингулярных чисел больше tol * max(sigma_max, reference). Для нулевой матрицы 0.

    reference задаёт внешний масштаб: матрица, вся лежащая ниже tol * reference,
    имеет ранг 0, даже если её собственный sigma_max не нулевой.
    """
    a = as_matrix(a)
    if tol is None:
        tol = default_tol(a.shape)
    return _rank_from_singular_values(singular_values(a), tol, reference)


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Ортонормальный базис: столбцы vectors (ambient_dim x dim)."""
    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.array(as_matrix(self.vectors, 'basis'), dtype=complex)
        vectors.setflags(write=False)
        object.__setattr__(self, 'vectors', vectors)

    @classmethod
    def empty(cls, ambient_dim: int) -> 'SubspaceBasis':
        return cls(np.zeros((ambient_dim, 0), dtype=complex))

    @classmethod
    def full(cls, ambient_dim: int) -> 'SubspaceBasis':
        return cls(np.eye(ambient_dim, dtype=complex))

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def rows(self) -> np.ndarray:
        """Сопряжённо-транспонированный базис: строки u с u @ a = 0 для левого ядра a."""
        return self.vectors.conj().T

    def first(self, count: int) -> 'SubspaceBasis':
        return SubspaceBasis(self.vectors[:, :count])

    def is_orthonormal(self, tol: float = ORTHONORMAL_TOL) -> bool:
        if self.dim == 0:
            return True
        gram = self.vectors.conj().T @ self.vectors
        return float(np.max(np.abs(gram - np.eye(self.dim)))) <= tol

    def residual_of(self, other: np.ndarray) -> float:
        """Наибольший модуль элемента у части столбцов other, лежащей вне span."""
        other = as_matrix(other)
        if other.size == 0:
            return 0.0
        outside = other - self.vectors @ (self.vectors.conj().T @ other)
        return float(np.max(np.abs(outside)))

    def contains(self, other: 'SubspaceBasis', tol: float = CONTAINMENT_TOL) -> bool:
        if other.ambient_dim != self.ambient_dim:
            return False
        return self.residual_of(other.vectors) <= tol


def range_basis(a, tol: Optional[float] = None) -> SubspaceBasis:
    """Ортонормальный базис пространства столбцов."""
    a = as_matrix(a)
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        return SubspaceBasis.empty(rows)
    if tol is None:
        tol = default_tol(a.shape)
    u, s, _ = linalg.svd(a, full_matrices=False)
    rank = _rank_from_singular_values(s, tol)
    return SubspaceBasis(u[:, :rank])


def null_space_basis(a, tol: Optional[float] = None, reference: Optional[float] = None) -> SubspaceBasis:
    """Ортонормальный базис правого ядра; размерность cols - numerical_rank(a, tol, reference)."""
    a = as_matrix(a)
    rows, cols = a.shape
    if cols == 0:
        return SubspaceBasis.empty(0)
    if rows == 0:
        return SubspaceBasis.full(cols)
    if tol is None:
        tol = default_tol(a.shape)
    _, s, vh = linalg.svd(a, full_matrices=True)
    rank = _rank_from_singular_values(s, tol, reference)
    return SubspaceBasis(vh[rank:].conj().T)


def left_null_space_basis(a, tol: Optional[float] = None, reference: Optional[float] = None) -> SubspaceBasis:
    """
    Базис ядра a^H (ambient_dim = rows). Строки basis.rows
    зануляют a слева: basis.rows @ a = 0.
    """
    a = as_matrix(a)
    return null_space_basis(a.conj().T, tol, reference)


def orthogonal_complement(b: SubspaceBasis) -> SubspaceBasis:
    if b.dim == 0:
        return SubspaceBasis.full(b.ambient_dim)
    return null_space_basis(b.vectors.conj().T)


def intersect_subspaces(b1: SubspaceBasis, b2: SubspaceBasis, tol: Optional[float] = None) -> SubspaceBasis:
    """
    Базис span(b1) ∩ span(b2).

    Вектор пересечения b1 @ y = b2 @ z, то есть [y; z] лежит в ядре [b1, -b2].
    """
    if b1.ambient_dim != b2.ambient_dim:
        raise InvalidInputError(
            f'ambient dimension mismatch: {b1.ambient_dim} vs {b2.ambient_dim}'
        )
    if b1.dim == 0 or b2.dim == 0:
        return SubspaceBasis.empty(b1.ambient_dim)
    kernel = null_space_basis(np.hstack([b1.vectors, -b2.vectors]), tol)
    if kernel.dim == 0:
        return SubspaceBasis.empty(b1.ambient_dim)
    return range_basis(b1.vectors @ kernel.vectors[:b1.dim], tol)


def complement_within(big: SubspaceBasis, sub: SubspaceBasis, tol: float = CONTAINMENT_TOL) -> SubspaceBasis:
    """
    Ортогональное дополнение span(sub) внутри span(big).

    Размерность результата dim(big) - dim(sub); требуется span(sub) ⊆ span(big).
    """
    if big.ambient_dim != sub.ambient_dim:
        raise InvalidInputError(
            f'ambient dimension mismatch: {big.ambient_dim} vs {sub.ambient_dim}'
        )
    if sub.dim == 0:
        return SubspaceBasis(big.vectors)
    residual = big.residual_of(sub.vectors)
    if residual > tol:
        raise PreconditionError(
            f'subspace is not contained in the enclosing span (residual {residual:.3e})'
        )
    target = big.dim - sub.dim
    if target <= 0:
        return SubspaceBasis.empty(big.ambient_dim)
    # проекция базиса big на ортогональное дополнение sub: ровно target сингулярных чисел равны 1
    projected = big.vectors - sub.vectors @ (sub.vectors.conj().T @ big.vectors)
    u, _, _ = linalg.svd(projected, full_matrices=False)
    return SubspaceBasis(u[:, :target])


def is_invertible(a, tol: float) -> bool:
    """Квадратная матрица с sigma_min > tol * sigma_max."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    if a.size == 0:
        return True
    s = singular_values(a)
    return bool(s[-1] > tol * s[0])


def has_full_column_rank(a, tol: float) -> bool:
    a = as_matrix(a)
    if a.shape[1] == 0:
        return True
    if a.shape[0] < a.shape[1]:
        return False
    return numerical_rank(a, tol) == a.shape[1]
