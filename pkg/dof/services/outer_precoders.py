"""
Внешний слой схемы: блочно-диагональные прекодеры E_k = diag(E_kh, E_km, E_kt)
по распределению символов из allocation.

Средний блок строится по ветви:
  - случайно (низкий режим, p = 1);
  - цепочками выравнивания длины p (ChainN) или двумя группами цепочек (ChainM);
  - циклическим выравниванием по собственным векторам (M = N, D_t > 3M/2).
Всё, что строится, лежит в рабочей ориентации M_T ≤ M_R.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from dof.constants import FULL_RANK_TOL
from dof.exceptions import ConstructionError, InfeasibleChainError, InvalidInputError, PreconditionError
from dof.services.allocation import MiddleDesign, SymbolAllocation
from dof.services.channels import USERS
from dof.services.inner_transforms import EquivalentChannel
from dof.services.params import Regime
from dof.utils.matrix_json import matrix_to_json
from dof.utils.rng import complex_gaussian, substream
from dof.utils.subspace import complement_within, has_full_column_rank, null_space_basis, range_basis

logger = logging.getLogger(__name__)

PMats = Dict[Tuple[int, int], np.ndarray]


# ---------- Цепочки выравнивания ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChainSolution:
    """
    Одна цепочка: передатчики transmitters[s] и приёмники receivers[s], на
    которых совпадают образы слотов s и s+1. blocks[s] - слот (M̃ × dim).
    """
    group: int
    origin: int
    transmitters: Tuple[int, ...]
    receivers: Tuple[int, ...]
    null_dim: int
    matrix: np.ndarray
    solution: np.ndarray
    blocks: Tuple[np.ndarray, ...]

    @property
    def length(self) -> int:
        return len(self.transmitters)


@dataclass(frozen=True)
class ChainSlot:
    """Столбцы columns = [start, stop) прекодера E_transmitter заняты слотом position цепочки."""
    group: int
    origin: int
    position: int
    transmitter: int
    columns: Tuple[int, int]

    def to_dict(self):
        return {
            'group': self.group, 'origin': self.origin, 'position': self.position,
            'transmitter': self.transmitter, 'columns': list(self.columns),
        }


def chain_schedule(origin: int, length: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """
    Цепочка из origin проходит передатчики origin, origin-1, origin+1, ...;
    звено s выравнивается на приёмнике transmitters[s] + 1, для которого
    оба соседних передатчика - мешающие.
    """
    transmitters = tuple((origin - s) % USERS for s in range(length))
    receivers = tuple((t + 1) % USERS for t in transmitters[:-1])
    return transmitters, receivers


def chain_matrix(pmats: PMats, transmitters: Sequence[int], receivers: Sequence[int]) -> np.ndarray:
    """Блочно-двухдиагональная матрица A: A·G = 0 ⇔ P_ρ,t_s G_s = P_ρ,t_(s+1) G_(s+1) для всех звеньев."""
    n_tilde, m_tilde = next(iter(pmats.values())).shape
    length = len(transmitters)
    a = np.zeros(((length - 1) * n_tilde, length * m_tilde), dtype=complex)
    for s, rx in enumerate(receivers):
        rows = slice(s * n_tilde, (s + 1) * n_tilde)
        a[rows, s * m_tilde:(s + 1) * m_tilde] = pmats[(rx, transmitters[s])]
        a[rows, (s + 1) * m_tilde:(s + 2) * m_tilde] = -pmats[(rx, transmitters[s + 1])]
    return a


def build_alignment_chains(pmats: PMats, p: int, dim: int, seed: int, group: int = 1,
                           exclude: Optional[Sequence[np.ndarray]] = None) -> List[ChainSolution]:
    """
    По одной цепочке длины p из каждого начального передатчика. Решение G
    берётся из ядра A (если задан exclude[origin] - из его части, линейно
    независимой от столбцов exclude[origin]) и режется на p слотов по M̃ строк.
    """
    if p < 2:
        raise InvalidInputError(f'alignment chains need length p >= 2, got {p}')
    if dim < 0:
        raise InvalidInputError(f'chain dimension must be non-negative, got {dim}')
    m_tilde = next(iter(pmats.values())).shape[1]

    chains = []
    for origin in range(USERS):
        transmitters, receivers = chain_schedule(origin, p)
        a = chain_matrix(pmats, transmitters, receivers)
        kernel = null_space_basis(a)
        null_dim = kernel.dim
        logger.debug(f'chain group {group} origin {origin}: A {a.shape}, null dimension {null_dim}')

        if exclude is not None:
            try:
                kernel = complement_within(kernel, range_basis(exclude[origin]))
            except PreconditionError as e:
                raise ConstructionError(f'group {group} origin {origin}: {e}', tag='chain_exclusion') from e
        if dim > kernel.dim:
            raise InfeasibleChainError(
                f'chain of length {p} needs dimension {dim}, only {kernel.dim} available '
                f'(A is {a.shape[0]}x{a.shape[1]}, null dimension {null_dim})',
                block=f'chain[{group}][{origin}]',
            )
        if dim == kernel.dim:
            solution = kernel.vectors
        else:
            mixing = complex_gaussian(substream(seed, 'outer', 'chain', group, origin), (kernel.dim, dim))
            solution = kernel.vectors @ mixing
        blocks = tuple(solution[s * m_tilde:(s + 1) * m_tilde] for s in range(p))
        chains.append(ChainSolution(
            group=group, origin=origin, transmitters=transmitters, receivers=receivers,
            null_dim=null_dim, matrix=a, solution=solution, blocks=blocks,
        ))
    return chains


def build_cycle(pmats: PMats, dim: int) -> Tuple[np.ndarray, ...]:
    """
    Циклическое выравнивание при квадратных P (M = N): на приёмниках 1 и 2
    выравнивание точное, на приёмнике 0 span(E_0) инвариантно относительно
    T = (P_02 P_12⁻¹ P_10)⁻¹ P_01 P_21⁻¹ P_20, поэтому E_0 - собственные векторы T.
    """
    try:
        to_one = linalg.solve(pmats[(2, 1)], pmats[(2, 0)])
        to_two = linalg.solve(pmats[(1, 2)], pmats[(1, 0)])
        operator = linalg.solve(pmats[(0, 2)] @ to_two, pmats[(0, 1)] @ to_one)
    except (linalg.LinAlgError, ValueError) as e:
        raise ConstructionError(f'cycle alignment: singular P matrices ({e})', tag='cycle_singular') from e
    eigenvalues, eigenvectors = linalg.eig(operator)
    order = np.argsort(-np.abs(eigenvalues), kind='stable')
    e0 = eigenvectors[:, order[:dim]]
    return e0, to_one @ e0, to_two @ e0


# ---------- Прекодеры ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    e: Tuple[np.ndarray, ...]
    alloc: SymbolAllocation
    slots: Tuple[ChainSlot, ...] = ()
    chains: Tuple[ChainSolution, ...] = ()
    cycle: Optional[Tuple[np.ndarray, ...]] = None

    def middle(self, k: int) -> np.ndarray:
        caps, alloc = self.alloc.caps, self.alloc
        return self.e[k][caps.slice('middle'), alloc.dh:alloc.dh + alloc.dm]

    def to_dict(self):
        return {
            'allocation': self.alloc.to_dict(),
            'e': [matrix_to_json(e) for e in self.e],
            'slots': [slot.to_dict() for slot in self.slots],
            'chain_null_dims': [
                {'group': c.group, 'origin': c.origin, 'null_dim': c.null_dim} for c in self.chains
            ],
        }


def _block_diagonal(blocks: Sequence[np.ndarray]) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r, c = r + b.shape[0], c + b.shape[1]
    return out


def _random_block(seed: int, k: int, tag: str, shape: Tuple[int, int]) -> np.ndarray:
    """Случайный блок полного столбцового ранга; одна повторная попытка."""
    for attempt in range(2):
        block = complex_gaussian(substream(seed, 'outer', k, tag, attempt), shape)
        if has_full_column_rank(block, FULL_RANK_TOL):
            return block
    raise ConstructionError(f'random block {tag} of user {k} is rank deficient', block=f'E[{k}]{tag}',
                            tag='precoder_rank')


def _assemble(alloc: SymbolAllocation, middles: Sequence[np.ndarray], seed: int) -> Tuple[np.ndarray, ...]:
    caps = alloc.caps
    e = []
    for k in range(USERS):
        head = _random_block(seed, k, 'head', (caps.head, alloc.dh))
        tail = _random_block(seed, k, 'tail', (caps.tail, alloc.dt_))
        e_k = _block_diagonal([head, middles[k], tail])
        if e_k.shape[1] != alloc.dbar:
            raise ConstructionError(f'E[{k}] has {e_k.shape[1]} columns, expected {alloc.dbar}', block=f'E[{k}]',
                                    tag='precoder_shape')
        if not has_full_column_rank(e_k, FULL_RANK_TOL):
            raise ConstructionError(f'E[{k}] is not of full column rank', block=f'E[{k}]', tag='precoder_rank')
        e.append(e_k)
    return tuple(e)


def build_low(alloc: SymbolAllocation, seed: int) -> PrecoderSet:
    """Низкий режим: все три диагональных блока случайные."""
    middles = [_random_block(seed, k, 'middle', (alloc.caps.middle, alloc.dm)) for k in range(USERS)]
    return PrecoderSet(e=_assemble(alloc, middles, seed), alloc=alloc)


def _collect_chain_columns(chains: Sequence[ChainSolution], per_user: List[List[np.ndarray]],
                           offsets: List[int], slots: List[ChainSlot]) -> None:
    for chain in chains:
        for position, (tx, block) in enumerate(zip(chain.transmitters, chain.blocks)):
            start = offsets[tx]
            per_user[tx].append(block)
            offsets[tx] += block.shape[1]
            slots.append(ChainSlot(chain.group, chain.origin, position, tx, (start, offsets[tx])))


def build_high(alloc: SymbolAllocation, eq: EquivalentChannel, seed: int) -> PrecoderSet:
    """Высокий режим: случайные голова и хвост, средний блок по ветви."""
    caps = alloc.caps
    pmats = eq.pmats()
    m_tilde = caps.middle
    slots: List[ChainSlot] = []
    chains: List[ChainSolution] = []
    cycle = None

    if alloc.middle in (MiddleDesign.EMPTY, MiddleDesign.RANDOM):
        middles = [_random_block(seed, k, 'middle', (m_tilde, alloc.dm)) for k in range(USERS)]
    elif alloc.middle == MiddleDesign.CYCLE:
        cycle = build_cycle(pmats, alloc.dm)
        middles = list(cycle)
    else:
        per_user: List[List[np.ndarray]] = [[] for _ in range(USERS)]
        offsets = [alloc.dh] * USERS
        if alloc.middle == MiddleDesign.CHAINS:
            chains = build_alignment_chains(pmats, alloc.p, alloc.r, seed, group=1)
            _collect_chain_columns(chains, per_user, offsets, slots)
        else:
            chains = build_alignment_chains(pmats, alloc.p, alloc.r_prime, seed, group=1)
            _collect_chain_columns(chains, per_user, offsets, slots)
            if alloc.p == 2:
                for k in range(USERS):
                    per_user[k].append(_random_block(seed, k, 'group2', (m_tilde, alloc.r_hat)))
            else:
                # вторая группа: цепочки длины p-1, независимые от усечённого решения первой группы
                exclude = [chain.solution[:(alloc.p - 1) * m_tilde] for chain in chains]
                second = build_alignment_chains(pmats, alloc.p - 1, alloc.r_hat, seed, group=2, exclude=exclude)
                _collect_chain_columns(second, per_user, offsets, slots)
                chains = chains + second
        middles = [
            np.hstack(blocks) if blocks else np.zeros((m_tilde, 0), dtype=complex)
            for blocks in per_user
        ]

    for k, middle in enumerate(middles):
        if middle.shape != (m_tilde, alloc.dm):
            raise ConstructionError(
                f'middle block of user {k} has shape {middle.shape}, expected {(m_tilde, alloc.dm)}',
                block=f'E[{k}]m', tag='precoder_shape',
            )
    return PrecoderSet(e=_assemble(alloc, middles, seed), alloc=alloc, slots=tuple(slots),
                       chains=tuple(chains), cycle=cycle)


def build_precoders(alloc: SymbolAllocation, eq: EquivalentChannel, seed: int) -> PrecoderSet:
    if alloc.regime == Regime.LOW:
        return build_low(alloc, seed)
    return build_high(alloc, eq, seed)


# ---------- Сертификат выравнивания -----------------------------------------------------


@dataclass
class LinkResidual:
    kind: str  # 'chain' | 'cycle'
    receiver: int
    transmitters: Tuple[int, int]
    residual: float
    group: Optional[int] = None
    origin: Optional[int] = None

    def to_dict(self):
        return {
            'kind': self.kind, 'receiver': self.receiver, 'transmitters': list(self.transmitters),
            'residual': self.residual, 'group': self.group, 'origin': self.origin,
        }


def chain_link_residuals(ps: PrecoderSet, pmats: PMats) -> List[LinkResidual]:
    """
    Для звеньев цепочек - относительная невязка ‖P_a G_a − P_b G_b‖ по столбцам,
    для циклического выравнивания - невязка совпадения span.
    """
    out = []
    for chain in ps.chains:
        for s, rx in enumerate(chain.receivers):
            a_tx, b_tx = chain.transmitters[s], chain.transmitters[s + 1]
            left = pmats[(rx, a_tx)] @ chain.blocks[s]
            right = pmats[(rx, b_tx)] @ chain.blocks[s + 1]
            scale = max(np.linalg.norm(left), np.linalg.norm(right))
            residual = float(np.linalg.norm(left - right) / scale) if scale > 0 else 0.0
            out.append(LinkResidual('chain', rx, (a_tx, b_tx), residual, chain.group, chain.origin))

    if ps.cycle is not None:
        for k in range(USERS):
            nxt, prv = (k + 1) % USERS, (k - 1) % USERS
            left = pmats[(k, nxt)] @ ps.cycle[nxt]
            right = pmats[(k, prv)] @ ps.cycle[prv]
            if right.size == 0:
                out.append(LinkResidual('cycle', k, (nxt, prv), 0.0))
                continue
            scale = float(np.max(np.abs(right)))
            residual = range_basis(left).residual_of(right) / scale if scale > 0 else 0.0
            out.append(LinkResidual('cycle', k, (nxt, prv), float(residual)))
    return out
