"""
Модели канала: девять матриц H_ki (приёмник k, передатчик i) с рангами
D_0 на прямых линиях, D_1 на H_k(k+1) и D_2 на H_k(k-1), индексы по модулю 3.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from dof import __version__
from dof.constants import DEFAULT_ULA_DELTA, PROVENANCE_GENERIC, PROVENANCE_ULA, PROVENANCES, TWO_PI, \
    WORKED_EXAMPLE_AOA_FIRST, WORKED_EXAMPLE_AOA_SECOND, WORKED_EXAMPLE_AOD_FIRST, WORKED_EXAMPLE_AOD_SECOND
from dof.exceptions import ConstructionError, InvalidInputError
from dof.services.params import SystemParams
from dof.utils.matrix_json import matrix_from_json, matrix_to_json
from dof.utils.rng import complex_gaussian, substream
from dof.utils.subspace import as_matrix, numerical_rank

logger = logging.getLogger(__name__)

USERS = 3


def link_rank(params: SystemParams, k: int, i: int) -> int:
    """Ранг линии передатчик i -> приёмник k по шаблону (D_0, D_1, D_2)."""
    k, i = k % USERS, i % USERS
    if k == i:
        return params.d0
    if i == (k + 1) % USERS:
        return params.d1
    return params.d2


# ---------- Геометрия ULA ----------------------------------------------------


@dataclass(frozen=True)
class UlaGeometry:
    """
    Лучевая модель с равномерными линейными решётками.

    paths[k][i] - число лучей L_ki, aoa[k][i] / aod[k][i] - углы прихода и
    ухода каждого луча (радианы), delta - шаг решётки в длинах волн.
    """
    delta: float
    paths: Tuple[Tuple[int, ...], ...]
    aoa: Tuple[Tuple[Tuple[float, ...], ...], ...]
    aod: Tuple[Tuple[Tuple[float, ...], ...], ...]

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidInputError(f'array spacing must be positive, got {self.delta}')
        object.__setattr__(self, 'paths', tuple(tuple(int(v) for v in row) for row in self.paths))
        object.__setattr__(self, 'aoa', _angle_table(self.aoa))
        object.__setattr__(self, 'aod', _angle_table(self.aod))
        if len(self.paths) != USERS or any(len(row) != USERS for row in self.paths):
            raise InvalidInputError('paths must be a 3x3 table')
        for k in range(USERS):
            for i in range(USERS):
                count = self.paths[k][i]
                if count < 0:
                    raise InvalidInputError(f'path count L[{k}][{i}] is negative')
                if len(self.aoa[k][i]) != count or len(self.aod[k][i]) != count:
                    raise InvalidInputError(
                        f'link ({k}, {i}): {count} paths but {len(self.aoa[k][i])} arrival '
                        f'and {len(self.aod[k][i])} departure angles'
                    )

    @classmethod
    def random(cls, params: SystemParams, seed: int, delta: float = DEFAULT_ULA_DELTA) -> 'UlaGeometry':
        """Число лучей повторяет шаблон рангов, углы равномерны на [0, 2π)."""
        paths = [[link_rank(params, k, i) for i in range(USERS)] for k in range(USERS)]
        aoa = [[None] * USERS for _ in range(USERS)]
        aod = [[None] * USERS for _ in range(USERS)]
        for k in range(USERS):
            for i in range(USERS):
                rng = substream(seed, 'ula', k, i)
                aoa[k][i] = tuple(rng.uniform(0.0, TWO_PI, size=paths[k][i]))
                aod[k][i] = tuple(rng.uniform(0.0, TWO_PI, size=paths[k][i]))
        return cls(delta=delta, paths=paths, aoa=aoa, aod=aod)

    @classmethod
    def worked_example(cls, delta: float = DEFAULT_ULA_DELTA) -> 'UlaGeometry':
        """Опубликованная конфигурация M_T=2, M_R=4: два луча на прямых линиях, один на перекрёстных."""
        paths, aoa, aod = [], [], []
        for k in range(USERS):
            paths.append([2 if k == i else 1 for i in range(USERS)])
            aoa.append([
                (WORKED_EXAMPLE_AOA_FIRST[k][i], WORKED_EXAMPLE_AOA_SECOND[k]) if k == i
                else (WORKED_EXAMPLE_AOA_FIRST[k][i],)
                for i in range(USERS)
            ])
            aod.append([
                (WORKED_EXAMPLE_AOD_FIRST[k][i], WORKED_EXAMPLE_AOD_SECOND[k]) if k == i
                else (WORKED_EXAMPLE_AOD_FIRST[k][i],)
                for i in range(USERS)
            ])
        return cls(delta=delta, paths=paths, aoa=aoa, aod=aod)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'delta': self.delta,
            'paths': [list(row) for row in self.paths],
            'aoa': [[list(angles) for angles in row] for row in self.aoa],
            'aod': [[list(angles) for angles in row] for row in self.aod],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'UlaGeometry':
        return cls(delta=float(data['delta']), paths=data['paths'], aoa=data['aoa'], aod=data['aod'])


def _angle_table(table) -> Tuple[Tuple[Tuple[float, ...], ...], ...]:
    return tuple(tuple(tuple(float(a) for a in angles) for angles in row) for row in table)


@dataclass(frozen=True)
class Provenance:
    kind: str
    seed: Optional[int] = None
    geometry: Optional[UlaGeometry] = None

    def __post_init__(self):
        if self.kind not in PROVENANCES:
            raise InvalidInputError(f'unknown provenance {self.kind!r}, expected one of {PROVENANCES}')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'seed': self.seed,
            'geometry': self.geometry.to_dict() if self.geometry is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Provenance':
        geometry = data.get('geometry')
        return cls(
            kind=data['kind'],
            seed=data.get('seed'),
            geometry=UlaGeometry.from_dict(geometry) if geometry else None,
        )


# ---------- Набор каналов ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChannelSet:
    h: Tuple[Tuple[np.ndarray, ...], ...]
    params: SystemParams
    provenance: Provenance = field(default_factory=lambda: Provenance(PROVENANCE_GENERIC))

    def __post_init__(self):
        if len(self.h) != USERS or any(len(row) != USERS for row in self.h):
            raise InvalidInputError('channel set must hold a 3x3 table of matrices')
        expected = (self.params.mr, self.params.mt)
        frozen = []
        for k in range(USERS):
            row = []
            for i in range(USERS):
                matrix = np.array(as_matrix(self.h[k][i], f'H[{k}][{i}]'), dtype=complex)
                if matrix.shape != expected:
                    raise InvalidInputError(f'H[{k}][{i}] has shape {matrix.shape}, expected {expected}')
                matrix.setflags(write=False)
                row.append(matrix)
            frozen.append(tuple(row))
        object.__setattr__(self, 'h', tuple(frozen))

    def link(self, k: int, i: int) -> np.ndarray:
        return self.h[k % USERS][i % USERS]

    def rank_mismatches(self, tol: Optional[float] = None) -> List[Tuple[int, int, int, int]]:
        """Линии, ранг которых расходится с шаблоном: (k, i, ожидаемый, измеренный)."""
        out = []
        for k in range(USERS):
            for i in range(USERS):
                expected = link_rank(self.params, k, i)
                measured = numerical_rank(self.h[k][i], tol)
                if measured != expected:
                    out.append((k, i, expected, measured))
        return out

    def validate_rank_pattern(self, tol: Optional[float] = None) -> None:
        mismatches = self.rank_mismatches(tol)
        if mismatches:
            logger.debug(f'{len(mismatches)} links off the rank pattern of {self.params.as_tuple()}: {mismatches}')
            k, i, expected, measured = mismatches[0]
            raise ConstructionError(
                f'rank pattern mismatch at H[{k}][{i}]: expected {expected}, measured {measured}',
                block=f'H[{k}][{i}]', tag='rank_pattern_mismatch',
            )

    def reciprocal(self) -> 'ChannelSet':
        """H'_ki = H_ik^T: передатчики становятся приёмниками, D_1 и D_2 меняются местами."""
        h = tuple(tuple(self.h[i][k].T for i in range(USERS)) for k in range(USERS))
        return ChannelSet(h=h, params=self.params.reciprocal(), provenance=self.provenance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'version': __version__,
            'params': self.params.to_dict(),
            'provenance': self.provenance.to_dict(),
            'shape': [self.params.mr, self.params.mt],
            'h': [[matrix_to_json(self.h[k][i]) for i in range(USERS)] for k in range(USERS)],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ChannelSet':
        try:
            params = SystemParams.from_dict(data['params'])
            rows, cols = data['shape']
            h = tuple(
                tuple(matrix_from_json(data['h'][k][i], rows, cols) for i in range(USERS))
                for k in range(USERS)
            )
            provenance = Provenance.from_dict(data.get('provenance') or {'kind': PROVENANCE_GENERIC})
        except InvalidInputError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise InvalidInputError(f'malformed channel document: {e}') from e
        return cls(h=h, params=params, provenance=provenance)

    @classmethod
    def from_json(cls, text: str) -> 'ChannelSet':
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidInputError(f'channel document is not valid JSON: {e}') from e
        return cls.from_dict(data)


# ---------- Генерация ----------------------------------------------------------


def gen_generic(params: SystemParams, seed: int) -> ChannelSet:
    """H_ki = B·C, B: M_R×D и C: D×M_T с независимыми комплексными гауссовскими элементами."""
    h = []
    for k in range(USERS):
        row = []
        for i in range(USERS):
            rank = link_rank(params, k, i)
            rng = substream(seed, 'channel', k, i)
            left = complex_gaussian(rng, (params.mr, rank))
            right = complex_gaussian(rng, (rank, params.mt))
            row.append(left @ right)
        h.append(tuple(row))
    return ChannelSet(h=tuple(h), params=params, provenance=Provenance(PROVENANCE_GENERIC, seed=seed))


def steering_vector(angle: float, n_elems: int, delta: float = DEFAULT_ULA_DELTA) -> np.ndarray:
    """Отклик ULA: элемент j равен exp(i·2π·delta·j·sin(angle))."""
    if n_elems < 1:
        raise InvalidInputError(f'array needs at least one element, got {n_elems}')
    j = np.arange(n_elems)
    return np.exp(1j * 2 * np.pi * delta * j * np.sin(angle)).reshape(-1, 1)


def gen_ula(params: SystemParams, geom: UlaGeometry, seed: Optional[int] = None) -> ChannelSet:
    """H_ki = (1/√L_ki) Σ_l a_R(φ_l) a_T(θ_l)^H."""
    h = []
    for k in range(USERS):
        row = []
        for i in range(USERS):
            count = geom.paths[k][i]
            matrix = np.zeros((params.mr, params.mt), dtype=complex)
            for phi, theta in zip(geom.aoa[k][i], geom.aod[k][i]):
                receive = steering_vector(phi, params.mr, geom.delta)
                transmit = steering_vector(theta, params.mt, geom.delta)
                matrix += receive @ transmit.conj().T
            if count:
                matrix /= np.sqrt(count)
            row.append(matrix)
        h.append(tuple(row))
    return ChannelSet(h=tuple(h), params=params, provenance=Provenance(PROVENANCE_ULA, seed=seed, geometry=geom))


def generate(params: SystemParams, provenance: str, seed: int, delta: float = DEFAULT_ULA_DELTA) -> ChannelSet:
    """Случайный набор каналов выбранной модели."""
    if provenance == PROVENANCE_GENERIC:
        return gen_generic(params, seed)
    if provenance == PROVENANCE_ULA:
        return gen_ula(params, UlaGeometry.random(params, seed, delta), seed)
    raise InvalidInputError(f'unknown provenance {provenance!r}, expected one of {PROVENANCES}')


def worked_example_channels(delta: float = DEFAULT_ULA_DELTA) -> ChannelSet:
    params = SystemParams(2, 4, 2, 1, 1)
    return gen_ula(params, UlaGeometry.worked_example(delta))


def apply_channel(cs: ChannelSet, xs: Sequence[np.ndarray], noise_std: float = 0.0,
                  seed: int = 0) -> Tuple[np.ndarray, ...]:
    """
    y_k = Σ_i H_ki x_i + n_k. x_i - вектор длины M_T или матрица M_T×s
    (столбцы - отдельные использования канала).
    """
    if len(xs) != USERS:
        raise InvalidInputError(f'expected {USERS} transmit signals, got {len(xs)}')
    if noise_std < 0:
        raise InvalidInputError(f'noise_std must be non-negative, got {noise_std}')
    signals = []
    for i, x in enumerate(xs):
        x = np.asarray(x, dtype=complex)
        if x.shape[0] != cs.params.mt or x.ndim > 2:
            raise InvalidInputError(f'x[{i}] has shape {x.shape}, expected leading dimension {cs.params.mt}')
        signals.append(x)
    if len({x.shape for x in signals}) != 1:
        raise InvalidInputError('transmit signals must share one shape')

    ys = []
    for k in range(USERS):
        y = sum(cs.h[k][i] @ signals[i] for i in range(USERS))
        if noise_std > 0:
            y = y + noise_std * complex_gaussian(substream(seed, 'noise', k), y.shape)
        ys.append(y)
    return tuple(ys)
