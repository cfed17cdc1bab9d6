"""
Внутренний слой схемы: обратимые замены базиса R_k (приёмник) и T_k
(передатчик), после которых полносвязная сеть с вырожденными каналами
превращается в частично связную с полноранговыми блоками.

Строки R_k делятся на (head, middle, tail), столбцы T_k - так же.
Построение ведётся в рабочей ориентации M_T ≤ M_R; при M_T > M_R
строится обратная сеть, а результат переносится транспонированием.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from dof.constants import INVERTIBLE_TOL, ZERO_BLOCK_TOL
from dof.exceptions import ConstructionError
from dof.services.channels import USERS, ChannelSet
from dof.services.params import Regime
from dof.utils.rng import complex_gaussian, substream
from dof.utils.subspace import SubspaceBasis, complement_within, has_full_column_rank, intersect_subspaces, \
    is_invertible, left_null_space_basis, null_space_basis, singular_values

logger = logging.getLogger(__name__)

HEAD, MIDDLE, TAIL = 'head', 'middle', 'tail'
PARTS = (HEAD, MIDDLE, TAIL)


@dataclass(frozen=True)
class BlockSizes:
    head: int
    middle: int
    tail: int

    @property
    def total(self) -> int:
        return self.head + self.middle + self.tail

    def slice(self, part: str) -> slice:
        if part == HEAD:
            return slice(0, self.head)
        if part == MIDDLE:
            return slice(self.head, self.head + self.middle)
        if part == TAIL:
            return slice(self.head + self.middle, self.total)
        raise KeyError(part)

    def size(self, part: str) -> int:
        return getattr(self, part)

    def as_tuple(self) -> Tuple[int, int, int]:
        return self.head, self.middle, self.tail


@dataclass(frozen=True, eq=False)
class InnerTransforms:
    """
    r, t и размеры блоков даны в исходной ориентации сети.
    working() возвращает их в рабочей ориентации (M_T ≤ M_R), где
    строятся эквивалентный канал и внешние прекодеры.
    """
    r: Tuple[np.ndarray, ...]
    t: Tuple[np.ndarray, ...]
    rx_blocks: Tuple[BlockSizes, ...]
    tx_blocks: Tuple[BlockSizes, ...]
    regime: Regime
    reciprocal_applied: bool = False

    def working(self) -> Tuple[Tuple[np.ndarray, ...], Tuple[np.ndarray, ...]]:
        if not self.reciprocal_applied:
            return self.r, self.t
        return tuple(t.T for t in self.t), tuple(r.T for r in self.r)

    @property
    def working_rx_blocks(self) -> Tuple[BlockSizes, ...]:
        return self.tx_blocks if self.reciprocal_applied else self.rx_blocks

    @property
    def working_tx_blocks(self) -> Tuple[BlockSizes, ...]:
        return self.rx_blocks if self.reciprocal_applied else self.tx_blocks

    def with_receiver(self, k: int, r_k: np.ndarray) -> 'InnerTransforms':
        """Копия с заменённым R_k (в рабочей ориентации)."""
        r_w, t_w = self.working()
        r_w = tuple(r_k if j == k else r for j, r in enumerate(r_w))
        if not self.reciprocal_applied:
            return InnerTransforms(r_w, t_w, self.rx_blocks, self.tx_blocks, self.regime, False)
        return InnerTransforms(tuple(t.T for t in t_w), tuple(r.T for r in r_w),
                               self.rx_blocks, self.tx_blocks, self.regime, True)


# ---------- Эквивалентный канал ------------------------------------------------


@dataclass(frozen=True, eq=False)
class EquivalentChannel:
    """Все девять R_k·H_ki·T_i в рабочей ориентации, нарезанные по блокам."""
    links: Dict[Tuple[int, int], np.ndarray]
    rx_blocks: Tuple[BlockSizes, ...]
    tx_blocks: Tuple[BlockSizes, ...]
    regime: Regime

    def block(self, k: int, i: int, rx_part: str, tx_part: str) -> np.ndarray:
        k, i = k % USERS, i % USERS
        return self.links[(k, i)][self.rx_blocks[k].slice(rx_part), self.tx_blocks[i].slice(tx_part)]

    def h_head(self, k: int) -> np.ndarray:
        """H̃_kh: голова приёмника k от головы передатчика k-1."""
        return self.block(k, k - 1, HEAD, HEAD)

    def h_tail(self, k: int) -> np.ndarray:
        """H̃_kt: хвост приёмника k от хвоста передатчика k+1."""
        return self.block(k, k + 1, TAIL, TAIL)

    def p(self, k: int, i: int) -> np.ndarray:
        """P_ki: средний блок приёмника k от среднего блока передатчика i (i = k±1)."""
        return self.block(k, i, MIDDLE, MIDDLE)

    def pmats(self) -> Dict[Tuple[int, int], np.ndarray]:
        return {(k, i % USERS): self.p(k, i) for k in range(USERS) for i in (k + 1, k - 1)}

    def scale(self, k: int, i: int) -> float:
        link = self.links[(k % USERS, i % USERS)]
        return float(np.max(np.abs(link))) if link.size else 0.0


def _cross_pattern(regime: Regime) -> Dict[str, set]:
    """Ненулевые блоки перекрёстных линий: ключ 'next' - от передатчика k+1, 'prev' - от k-1."""
    if regime == Regime.LOW:
        return {'next': {(TAIL, TAIL)}, 'prev': {(HEAD, HEAD)}}
    return {
        'next': {(MIDDLE, MIDDLE), (MIDDLE, TAIL), (TAIL, TAIL)},
        'prev': {(HEAD, HEAD), (MIDDLE, HEAD), (MIDDLE, MIDDLE)},
    }


def working_channels(cs: ChannelSet, it: InnerTransforms) -> ChannelSet:
    return cs.reciprocal() if it.reciprocal_applied else cs


def equivalent_channel(cs: ChannelSet, it: InnerTransforms) -> EquivalentChannel:
    wcs = working_channels(cs, it)
    r_w, t_w = it.working()
    links = {
        (k, i): r_w[k] @ wcs.h[k][i] @ t_w[i]
        for k in range(USERS) for i in range(USERS)
    }
    return EquivalentChannel(links=links, rx_blocks=it.working_rx_blocks,
                             tx_blocks=it.working_tx_blocks, regime=it.regime)


# ---------- Отчёт о структуре ----------------------------------------------------


@dataclass
class PatternCheck:
    name: str
    kind: str  # 'zero' | 'nonzero' | 'full_rank' | 'full_column_rank'
    measured: float
    passed: bool

    def to_dict(self):
        return {'name': self.name, 'kind': self.kind, 'measured': self.measured, 'passed': self.passed}


@dataclass
class PatternReport:
    checks: List[PatternCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[PatternCheck]:
        return [check for check in self.checks if not check.passed]

    def max_zero_residual(self) -> float:
        residuals = [check.measured for check in self.checks if check.kind == 'zero']
        return max(residuals, default=0.0)

    def to_dict(self):
        return {'passed': self.passed, 'checks': [check.to_dict() for check in self.checks]}


def _sigma_ratio(a: np.ndarray) -> float:
    s = singular_values(a)
    if s.size == 0:
        return 1.0
    if s[0] == 0:
        return 0.0
    return float(s[-1] / s[0])


def verify_pattern(eq: EquivalentChannel, tol: float = ZERO_BLOCK_TOL) -> PatternReport:
    """
    Проверяет шаблон частично связного канала: нулевые блоки перекрёстных
    линий ниже tol относительно масштаба линии, обязательные блоки ненулевые,
    H̃_kh, H̃_kt полного ранга, P_k(k±1) полного столбцового ранга.
    """
    report = PatternReport()
    pattern = _cross_pattern(eq.regime)

    for k in range(USERS):
        for side, i in (('next', (k + 1) % USERS), ('prev', (k - 1) % USERS)):
            scale = eq.scale(k, i)
            for rx_part in PARTS:
                for tx_part in PARTS:
                    block = eq.block(k, i, rx_part, tx_part)
                    if block.size == 0:
                        continue
                    measured = float(np.max(np.abs(block))) / scale if scale > 0 else 0.0
                    name = f'H~[{k}][{i}]({rx_part},{tx_part})'
                    if (rx_part, tx_part) in pattern[side]:
                        report.checks.append(PatternCheck(name, 'nonzero', measured, measured > tol))
                    else:
                        report.checks.append(PatternCheck(name, 'zero', measured, measured <= tol))

        for name, block in ((f'H~[{k}]h', eq.h_head(k)), (f'H~[{k}]t', eq.h_tail(k))):
            if block.size:
                ratio = _sigma_ratio(block)
                report.checks.append(PatternCheck(name, 'full_rank', ratio, ratio > INVERTIBLE_TOL))

        if eq.regime == Regime.HIGH:
            for i in (k + 1, k - 1):
                block = eq.p(k, i)
                if block.size:
                    ok = has_full_column_rank(block, INVERTIBLE_TOL)
                    report.checks.append(
                        PatternCheck(f'P[{k}][{i % USERS}]', 'full_column_rank', _sigma_ratio(block), ok)
                    )
    return report


# ---------- Построение ---------------------------------------------------------------


def _expect(basis: SubspaceBasis, expected: int, block: str) -> SubspaceBasis:
    if basis.dim != expected:
        raise ConstructionError(
            f'{block}: expected dimension {expected}, got {basis.dim} (non-generic channel?)',
            block=block, tag='dimension_mismatch',
        )
    return basis


def _check_invertible(matrices, label: str) -> None:
    for k, matrix in enumerate(matrices):
        if not is_invertible(matrix, INVERTIBLE_TOL):
            raise ConstructionError(f'{label}[{k}] is not invertible', block=f'{label}[{k}]', tag='not_invertible')


def _identity(cs: ChannelSet) -> InnerTransforms:
    mt, mr = cs.params.mt, cs.params.mr
    return InnerTransforms(
        r=tuple(np.eye(mr, dtype=complex) for _ in range(USERS)),
        t=tuple(np.eye(mt, dtype=complex) for _ in range(USERS)),
        rx_blocks=tuple(BlockSizes(0, mr, 0) for _ in range(USERS)),
        tx_blocks=tuple(BlockSizes(0, mt, 0) for _ in range(USERS)),
        regime=Regime.LOW,
    )


def build_low(cs: ChannelSet) -> InnerTransforms:
    """
    Низкий режим D_t ≤ M (рабочая ориентация M_T ≤ M_R).

    R_k = [U_k(k+1); U_k^c; U_k(k-1)]: U_k^c зануляет обоих мешающих,
    U_k(k+1) - только передатчик k+1 (D_2 строк), U_k(k-1) - только k-1 (D_1 строк).
    T_k = [V_(k-1)k, G_k, V_(k+1)k]: G_k не создаёт помех никому,
    V_(k-1)k не мешает приёмнику k-1 (D_2 столбцов), V_(k+1)k - приёмнику k+1 (D_1 столбцов).
    """
    params = cs.params
    m, n, d1, d2, dt = params.mt, params.mr, params.d1, params.d2, params.dt
    r, t = [], []
    for k in range(USERS):
        nxt, prv = (k + 1) % USERS, (k - 1) % USERS

        to_next = left_null_space_basis(cs.h[k][nxt])
        to_prev = left_null_space_basis(cs.h[k][prv])
        clean = _expect(left_null_space_basis(np.hstack([cs.h[k][nxt], cs.h[k][prv]])), n - dt, f'U_c[{k}]')
        u_next = _expect(complement_within(to_next, clean), d2, f'U[{k}][{nxt}]')
        u_prev = _expect(complement_within(to_prev, clean), d1, f'U[{k}][{prv}]')
        r.append(np.vstack([u_next.rows, clean.rows, u_prev.rows]))

        from_prev = null_space_basis(cs.h[prv][k])
        from_next = null_space_basis(cs.h[nxt][k])
        silent = _expect(null_space_basis(np.vstack([cs.h[prv][k], cs.h[nxt][k]])), m - dt, f'G[{k}]')
        v_prev = _expect(complement_within(from_prev, silent), d2, f'V[{prv}][{k}]')
        v_next = _expect(complement_within(from_next, silent), d1, f'V[{nxt}][{k}]')
        t.append(np.hstack([v_prev.vectors, silent.vectors, v_next.vectors]))

    _check_invertible(r, 'R')
    _check_invertible(t, 'T')
    return InnerTransforms(
        r=tuple(r), t=tuple(t),
        rx_blocks=tuple(BlockSizes(d2, n - dt, d1) for _ in range(USERS)),
        tx_blocks=tuple(BlockSizes(d2, m - dt, d1) for _ in range(USERS)),
        regime=Regime.LOW,
    )


def build_high(cs: ChannelSet, seed: int = 0) -> InnerTransforms:
    """
    Высокий режим M < D_t ≤ 2M (рабочая ориентация).

    U_k(k+1) - первые M-D_1 векторов левого ядра H_k(k+1) вне пересечения
    левых ядер обеих мешающих линий, U_k(k-1) - аналогично (M-D_2).
    Средний блок J_k случайный. V - правые ядра перекрёстных линий,
    Q_k - ядро помех, которые видят хвост приёмника k-1 и голова приёмника k+1.
    """
    params = cs.params
    m, n, d1, d2, dt = params.mt, params.mr, params.d1, params.d2, params.dt
    heads, tails, rows = [], [], []
    for k in range(USERS):
        nxt, prv = (k + 1) % USERS, (k - 1) % USERS
        to_next = left_null_space_basis(cs.h[k][nxt])
        to_prev = left_null_space_basis(cs.h[k][prv])
        common = _expect(intersect_subspaces(to_next, to_prev), max(0, n - dt), f'U_c[{k}]')

        head = complement_within(to_next, common)
        tail = complement_within(to_prev, common)
        if head.dim < m - d1 or tail.dim < m - d2:
            raise ConstructionError(
                f'receiver {k}: not enough zero-forcing directions '
                f'({head.dim} < {m - d1} or {tail.dim} < {m - d2})',
                block=f'U[{k}]', tag='dimension_mismatch',
            )
        head, tail = head.first(m - d1), tail.first(m - d2)
        middle = complex_gaussian(substream(seed, 'inner', k, 'J'), (n + dt - 2 * m, n))
        heads.append(head)
        tails.append(tail)
        rows.append(np.vstack([head.rows, middle, tail.rows]))

    t = []
    for k in range(USERS):
        nxt, prv = (k + 1) % USERS, (k - 1) % USERS
        v_prev = _expect(null_space_basis(cs.h[prv][k]), m - d1, f'V[{prv}][{k}]')
        v_next = _expect(null_space_basis(cs.h[nxt][k]), m - d2, f'V[{nxt}][{k}]')
        # хвост приёмника k-1 смотрит на передатчик k+1, голова приёмника k+1 - на k-1
        stacked = np.vstack([tails[prv].rows @ cs.h[prv][k], heads[nxt].rows @ cs.h[nxt][k]])
        aligned = _expect(null_space_basis(stacked), dt - m, f'Q[{k}]')
        t.append(np.hstack([v_prev.vectors, aligned.vectors, v_next.vectors]))

    _check_invertible(rows, 'R')
    _check_invertible(t, 'T')
    return InnerTransforms(
        r=tuple(rows), t=tuple(t),
        rx_blocks=tuple(BlockSizes(m - d1, n + dt - 2 * m, m - d2) for _ in range(USERS)),
        tx_blocks=tuple(BlockSizes(m - d1, dt - m, m - d2) for _ in range(USERS)),
        regime=Regime.HIGH,
    )


def _build_working(cs: ChannelSet, seed: int) -> InnerTransforms:
    params = cs.params
    if params.dt == 0:
        return _identity(cs)
    if params.dt <= params.m:
        return build_low(cs)
    return build_high(cs, seed)


def build(cs: ChannelSet, seed: Optional[int] = None) -> InnerTransforms:
    """
    Выбирает построитель по режиму. При M_T > M_R строит на обратной сети
    {H_ik^T} и переносит: R_k = T'_k^T, T_k = R'_k^T.
    """
    cs.validate_rank_pattern()
    if seed is None:
        seed = cs.provenance.seed or 0

    if cs.params.mt <= cs.params.mr:
        return _build_working(cs, seed)

    logger.debug(f'building on the reciprocal network for {cs.params.as_tuple()}')
    working = _build_working(cs.reciprocal(), seed)
    return InnerTransforms(
        r=tuple(t.T for t in working.t),
        t=tuple(r.T for r in working.r),
        rx_blocks=working.tx_blocks,
        tx_blocks=working.rx_blocks,
        regime=working.regime,
        reciprocal_applied=True,
    )
