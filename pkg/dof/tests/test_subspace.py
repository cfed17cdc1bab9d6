"""Тесты подпространственной алгебры: сверка рангов с точной арифметикой и свойства базисов."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dof.exceptions import InvalidInputError, PreconditionError
from dof.utils.rng import complex_gaussian, substream
from dof.utils.subspace import SubspaceBasis, complement_within, has_full_column_rank, intersect_subspaces, \
    is_invertible, left_null_space_basis, null_space_basis, numerical_rank, orthogonal_complement, range_basis


def exact_rank(matrix) -> int:
    """Ранг методом Гаусса над Fraction."""
    rows = [[Fraction(int(v)) for v in row] for row in matrix]
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    rank = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for r in range(n_rows):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col] / rows[rank][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def random_basis(seed: int, ambient: int, dim: int) -> SubspaceBasis:
    return range_basis(complex_gaussian(substream(seed, 'basis', ambient, dim), (ambient, dim)))


# ---------- Точный ранг ----------


def test_numerical_rank_matches_exact_rank_on_integer_matrices():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(1200):
        rows, cols = rng.integers(1, 7, size=2)
        inner = rng.integers(1, 7)
        if rng.random() < 0.5:
            # произведение с элементами -1..1 даёт ранг не выше inner
            matrix = rng.integers(-1, 2, size=(rows, inner)) @ rng.integers(-1, 2, size=(inner, cols))
        else:
            matrix = rng.integers(-2, 3, size=(rows, cols))
        assert numerical_rank(matrix.astype(float)) == exact_rank(matrix), matrix
        checked += 1
    assert checked >= 1000


def test_exact_rank_oracle_sanity():
    assert exact_rank([[1, 2], [2, 4]]) == 1
    assert exact_rank([[0, 0], [0, 0]]) == 0
    assert exact_rank([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == 3


def test_numerical_rank_of_zero_and_empty_matrices():
    assert numerical_rank(np.zeros((3, 4))) == 0
    assert numerical_rank(np.zeros((0, 4))) == 0
    assert numerical_rank(np.zeros((4, 0))) == 0


def test_reference_scale_drops_roundoff_level_matrices():
    tiny = 1e-17 * complex_gaussian(substream(3, 'tiny'), (3, 2))
    assert numerical_rank(tiny) == 2
    assert numerical_rank(tiny, 1e-9, reference=1.0) == 0
    assert left_null_space_basis(tiny, 1e-9).dim == 1
    assert left_null_space_basis(tiny, 1e-9, reference=1.0).dim == 3

    # масштаб ниже собственного sigma_max ничего не меняет
    a = complex_gaussian(substream(3, 'regular'), (3, 2))
    assert numerical_rank(a, 1e-9, reference=1e-30) == 2


def test_non_finite_entries_rejected():
    with pytest.raises(InvalidInputError):
        numerical_rank(np.array([[1.0, np.nan]]))
    with pytest.raises(InvalidInputError):
        range_basis(np.array([[np.inf], [1.0]]))


# ---------- Ядра и образы ----------


@settings(max_examples=60, deadline=None)
@given(
    rows=st.integers(min_value=1, max_value=8),
    cols=st.integers(min_value=1, max_value=8),
    rank=st.integers(min_value=0, max_value=8),
    seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
)
def test_null_space_dimension_and_annihilation(rows, cols, rank, seed):
    rank = min(rank, rows, cols)
    rng = substream(seed, 'null')
    a = complex_gaussian(rng, (rows, rank)) @ complex_gaussian(rng, (rank, cols))

    kernel = null_space_basis(a)
    assert kernel.ambient_dim == cols
    assert kernel.dim == cols - rank
    assert kernel.is_orthonormal()
    if kernel.dim:
        assert np.max(np.abs(a @ kernel.vectors)) <= 1e-10 * max(1.0, np.max(np.abs(a)))

    left = left_null_space_basis(a)
    assert left.dim == rows - rank
    if left.dim:
        assert np.max(np.abs(left.rows @ a)) <= 1e-10 * max(1.0, np.max(np.abs(a)))


@settings(max_examples=60, deadline=None)
@given(
    ambient=st.integers(min_value=1, max_value=9),
    dim1=st.integers(min_value=0, max_value=9),
    dim2=st.integers(min_value=0, max_value=9),
    seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
)
def test_generic_intersection_dimension(ambient, dim1, dim2, seed):
    dim1, dim2 = min(dim1, ambient), min(dim2, ambient)
    b1 = random_basis(seed, ambient, dim1)
    b2 = random_basis(seed + 1, ambient, dim2)

    common = intersect_subspaces(b1, b2)
    assert common.dim == max(0, dim1 + dim2 - ambient)
    assert b1.contains(common)
    assert b2.contains(common)


@settings(max_examples=60, deadline=None)
@given(
    ambient=st.integers(min_value=1, max_value=9),
    common=st.integers(min_value=0, max_value=9),
    extra1=st.integers(min_value=0, max_value=9),
    extra2=st.integers(min_value=0, max_value=9),
    seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
)
def test_intersection_is_symmetric(ambient, common, extra1, extra2, seed):
    common = min(common, ambient)
    extra1 = min(extra1, ambient - common)
    extra2 = min(extra2, ambient - common - extra1)
    shared = complex_gaussian(substream(seed, 'shared'), (ambient, common))
    b1 = range_basis(np.hstack([shared, complex_gaussian(substream(seed, 'first'), (ambient, extra1))]))
    b2 = range_basis(np.hstack([shared, complex_gaussian(substream(seed, 'second'), (ambient, extra2))]))

    forward = intersect_subspaces(b1, b2)
    backward = intersect_subspaces(b2, b1)
    assert forward.dim == backward.dim == common
    assert forward.contains(backward)
    assert backward.contains(forward)


def test_intersection_of_nested_subspaces_is_the_smaller_one():
    big = random_basis(7, 6, 4)
    small = SubspaceBasis(big.vectors[:, :2])
    common = intersect_subspaces(big, small)
    assert common.dim == 2
    assert common.contains(small)


def test_intersection_rejects_ambient_mismatch():
    with pytest.raises(InvalidInputError):
        intersect_subspaces(random_basis(1, 3, 1), random_basis(2, 4, 1))


def test_orthogonal_complement_of_empty_is_full():
    assert orthogonal_complement(SubspaceBasis.empty(5)).dim == 5
    b = random_basis(3, 5, 2)
    comp = orthogonal_complement(b)
    assert comp.dim == 3
    assert np.max(np.abs(b.rows @ comp.vectors)) < 1e-12


# ---------- Дополнение внутри подпространства ----------


def test_complement_within_dimension_and_orthogonality():
    big = random_basis(11, 8, 5)
    sub = range_basis(big.vectors @ complex_gaussian(substream(11, 'mix'), (5, 2)))

    comp = complement_within(big, sub)
    assert comp.dim == 3
    assert big.contains(comp)
    assert np.max(np.abs(sub.rows @ comp.vectors)) < 1e-10
    # comp и sub вместе покрывают big
    assert numerical_rank(np.hstack([comp.vectors, sub.vectors])) == 5


def test_complement_within_requires_containment():
    big = random_basis(12, 6, 2)
    outside = random_basis(13, 6, 1)
    with pytest.raises(PreconditionError):
        complement_within(big, outside)


def test_complement_of_whole_space_is_empty():
    big = random_basis(14, 4, 3)
    assert complement_within(big, big).dim == 0


# ---------- Обратимость ----------


def test_invertibility_checks():
    assert is_invertible(np.eye(3), 1e-8)
    assert not is_invertible(np.array([[1.0, 2.0], [2.0, 4.0]]), 1e-8)
    assert not is_invertible(np.ones((2, 3)), 1e-8)
    assert is_invertible(np.zeros((0, 0)), 1e-8)

    assert has_full_column_rank(np.zeros((3, 0)), 1e-8)
    assert not has_full_column_rank(np.ones((2, 3)), 1e-8)
    assert has_full_column_rank(complex_gaussian(substream(5, 'fcr'), (4, 3)), 1e-8)


def test_basis_is_read_only():
    basis = random_basis(21, 4, 2)
    with pytest.raises(ValueError):
        basis.vectors[0, 0] = 1.0
