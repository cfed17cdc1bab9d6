"""
Проверка схемы подсчётом размерностей.

На каждом приёмнике k: Z_k = rank(помех), приёмник декодируем, если
dbar + Z_k ≤ N и rank([полезный | помехи]) = dbar + Z_k. Затем строится
zero-forcing декодер и символы прогоняются через канал без шума.
"""
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import linalg

from dof import __version__
from dof.constants import DECODE_TOL, DEFAULT_ULA_DELTA, PROVENANCE_GENERIC, RANK_TOL, ZERO_BLOCK_TOL
from dof.exceptions import AllocationError, DofError, InvalidInputError, NoDecoderError
from dof.services.allocation import Branch, SymbolAllocation, allocate_symbols, plan_allocation, \
    spatial_extension_factor
from dof.services.channels import USERS, ChannelSet, apply_channel, generate
from dof.services.inner_transforms import InnerTransforms, build, equivalent_channel, verify_pattern, \
    working_channels
from dof.services.outer_precoders import PrecoderSet, build_precoders, chain_link_residuals
from dof.services.params import DerivedParams, Regime, SystemParams, derive, fraction_str, scale
from dof.utils.rng import substream, trial_seeds, unit_circle_symbols
from dof.utils.subspace import left_null_space_basis, numerical_rank

logger = logging.getLogger(__name__)

# ветви, где dbar + Z = N выполняется с равенством
TIGHT_BRANCHES = {Branch.LOW_FULL, Branch.HIGH_HALF_N, Branch.HIGH_CHAIN_N, Branch.HIGH_CHAIN_M, Branch.HIGH_CYCLE}

ChannelFactory = Callable[[SystemParams, int], ChannelSet]


# ---------- Эффективные линии и декодируемость ---------------------------------------


@dataclass(frozen=True, eq=False)
class EffectiveLinks:
    """
    desired[k] = R_k H_kk T_k E_k (N × dbar), interference[k] - столбцы от
    передатчика k+1, затем от k-1 (N × 2dbar). Рабочая ориентация.
    """
    desired: Tuple[np.ndarray, ...]
    interference: Tuple[np.ndarray, ...]
    dbar: int

    @property
    def n(self) -> int:
        return self.desired[0].shape[0]

    def stacked(self, k: int) -> np.ndarray:
        return np.hstack([self.desired[k], self.interference[k]])

    def scale(self, k: int) -> float:
        """sigma_max полного принятого сигнала [полезный | помехи] на приёмнике k."""
        stacked = self.stacked(k)
        return float(np.linalg.norm(stacked, 2)) if stacked.size else 0.0


def effective_links(cs: ChannelSet, it: InnerTransforms, ps: PrecoderSet) -> EffectiveLinks:
    wcs = working_channels(cs, it)
    r_w, t_w = it.working()
    for k in range(USERS):
        if ps.e[k].shape[0] != t_w[k].shape[1]:
            raise InvalidInputError(
                f'precoder E[{k}] has {ps.e[k].shape[0]} rows, transform T[{k}] has {t_w[k].shape[1]} columns'
            )
    signal = [t_w[i] @ ps.e[i] for i in range(USERS)]
    desired, interference = [], []
    for k in range(USERS):
        nxt, prv = (k + 1) % USERS, (k - 1) % USERS
        desired.append(r_w[k] @ wcs.h[k][k] @ signal[k])
        interference.append(np.hstack([r_w[k] @ wcs.h[k][nxt] @ signal[nxt], r_w[k] @ wcs.h[k][prv] @ signal[prv]]))
    return EffectiveLinks(desired=tuple(desired), interference=tuple(interference), dbar=ps.e[0].shape[1])


@dataclass
class ReceiverVerdict:
    receiver: int
    z: int
    rank_total: int
    decodable: bool
    rank_ok: bool

    @property
    def passed(self) -> bool:
        return self.decodable and self.rank_ok


def decodability(links: EffectiveLinks, dbar: int, tol: float = RANK_TOL) -> List[ReceiverVerdict]:
    """
    Z_k меряется в масштабе всего принятого сигнала: полностью подавленные
    помехи (остаток округления) дают Z_k = 0.
    """
    verdicts = []
    for k in range(USERS):
        z = numerical_rank(links.interference[k], tol, reference=links.scale(k))
        total = numerical_rank(links.stacked(k), tol)
        verdicts.append(ReceiverVerdict(
            receiver=k, z=z, rank_total=total,
            decodable=z + dbar <= links.n, rank_ok=total == dbar + z,
        ))
    return verdicts


def zero_forcing_decoder(links: EffectiveLinks, k: int, tol: float = RANK_TOL) -> np.ndarray:
    """
    W (dbar × N): строки из ортогонального дополнения помех, затем обращение
    сужения полезного сигнала, так что W·desired = I и W·interference ≈ 0.
    """
    verdict = decodability(links, links.dbar, tol)[k]
    if not verdict.passed:
        raise NoDecoderError(
            f'receiver {k} is not decodable: Z={verdict.z}, rank={verdict.rank_total}, dbar={links.dbar}'
        )
    clean = left_null_space_basis(links.interference[k], tol, reference=links.scale(k)).rows
    return linalg.pinv(clean @ links.desired[k]) @ clean


def predicted_z(derived: DerivedParams, alloc: SymbolAllocation) -> int:
    """Z = dh + dt_ в низком режиме, иначе dh + dt_ + 2dm - число выровненных измерений."""
    if derived.regime == Regime.LOW:
        return int(alloc.dh + alloc.dt_)
    return int(alloc.dh + alloc.dt_ + 2 * alloc.dm - alloc.aligned_dims)


# ---------- Результаты прогонов ----------------------------------------------------------


@dataclass
class TrialOptions:
    provenance: str = PROVENANCE_GENERIC
    delta: float = DEFAULT_ULA_DELTA
    zero_tol: float = ZERO_BLOCK_TOL
    rank_tol: float = RANK_TOL
    decode_tol: float = DECODE_TOL
    snr_db: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'TrialOptions':
        return cls(**(data or {}))


@dataclass
class ReceiverResult:
    receiver: int
    z_measured: int
    z_predicted: int
    rank_total: int
    decodable: bool
    rank_ok: bool
    tight: Optional[bool] = None
    max_symbol_error: Optional[float] = None
    interference_residual: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class TrialResult:
    index: int
    seed: int
    passed: bool = False
    streams_per_user: int = 0
    branch: Optional[str] = None
    receivers: List[ReceiverResult] = field(default_factory=list)
    max_zero_block_residual: Optional[float] = None
    max_chain_residual: Optional[float] = None
    chain_null_dims: List[int] = field(default_factory=list)
    snr_symbol_error: Optional[float] = None
    problems: List[Tuple[str, str]] = field(default_factory=list)

    def add_problem(self, code: str, detail: str = '') -> None:
        self.problems.append((code, detail))

    def to_dict(self) -> Dict[str, Any]:
        data = dict(self.__dict__)
        data['receivers'] = [r.to_dict() for r in self.receivers]
        data['problems'] = [list(p) for p in self.problems]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrialResult':
        data = dict(data)
        data['receivers'] = [ReceiverResult(**r) for r in data.get('receivers', [])]
        data['problems'] = [tuple(p) for p in data.get('problems', [])]
        return cls(**data)


def _transceivers(it: InnerTransforms, ps: PrecoderSet, decoders: Sequence[np.ndarray]):
    """Прекодеры и декодеры в исходной ориентации сети."""
    r_w, t_w = it.working()
    if not it.reciprocal_applied:
        return [t_w[k] @ ps.e[k] for k in range(USERS)], [decoders[k] @ r_w[k] for k in range(USERS)]
    # обратная сеть: передатчик k исходной сети - это приёмник k рабочей
    precoders = [(decoders[k] @ r_w[k]).T for k in range(USERS)]
    receivers = [(t_w[k] @ ps.e[k]).T for k in range(USERS)]
    return precoders, receivers


def run_pipeline(cs: ChannelSet, seed: int, index: int = 0, options: Optional[TrialOptions] = None) -> TrialResult:
    """Полный прогон схемы на готовом наборе каналов."""
    options = options or TrialOptions()
    result = TrialResult(index=index, seed=seed)
    try:
        it = build(cs, seed)
        eq = equivalent_channel(cs, it)
        pattern = verify_pattern(eq, options.zero_tol)
        result.max_zero_block_residual = float(pattern.max_zero_residual())
        for check in pattern.failures:
            result.add_problem('pattern', f'{check.name} {check.kind} {check.measured:.3e}')

        working = cs.params.reciprocal() if it.reciprocal_applied else cs.params
        derived = derive(working)
        alloc = allocate_symbols(derived)
        result.branch = alloc.branch.value
        ps = build_precoders(alloc, eq, seed)
    except AllocationError as e:
        result.add_problem('allocation', str(e))
        return result
    except DofError as e:
        tag = getattr(e, 'tag', 'construction_error')
        logger.warning(f'trial {index}: construction failed ({tag}): {e}')
        result.add_problem(tag, str(e))
        return result

    result.streams_per_user = alloc.dbar
    if alloc.regime == Regime.HIGH:
        residuals = chain_link_residuals(ps, eq.pmats())
        result.chain_null_dims = [chain.null_dim for chain in ps.chains]
        if residuals:
            result.max_chain_residual = float(max(r.residual for r in residuals))
            if result.max_chain_residual > options.zero_tol:
                result.add_problem('chain_residual', f'{result.max_chain_residual:.3e}')

    links = effective_links(cs, it, ps)
    verdicts = decodability(links, alloc.dbar, options.rank_tol)
    z_predicted = predicted_z(derived, alloc)
    tight = alloc.branch in TIGHT_BRANCHES

    decoders = []
    for verdict in verdicts:
        receiver = ReceiverResult(
            receiver=verdict.receiver, z_measured=verdict.z, z_predicted=z_predicted,
            rank_total=verdict.rank_total, decodable=verdict.decodable, rank_ok=verdict.rank_ok,
            tight=(alloc.dbar + verdict.z == links.n) if tight else None,
        )
        result.receivers.append(receiver)
        if not verdict.passed:
            result.add_problem('not_decodable', f'receiver {verdict.receiver}: Z={verdict.z}, rank={verdict.rank_total}')
            continue
        if verdict.z != z_predicted:
            result.add_problem('z_mismatch', f'receiver {verdict.receiver}: Z={verdict.z}, predicted {z_predicted}')
        if receiver.tight is False:
            result.add_problem('not_tight', f'receiver {verdict.receiver}: dbar+Z={alloc.dbar + verdict.z}')
        w = zero_forcing_decoder(links, verdict.receiver, options.rank_tol)
        interference = links.interference[verdict.receiver]
        scale_ = np.linalg.norm(w, 2) * links.scale(verdict.receiver) if interference.size else 0.0
        leak = float(np.max(np.abs(w @ interference)) / scale_) if scale_ > 0 else 0.0
        receiver.interference_residual = leak
        if leak > options.zero_tol:
            result.add_problem('interference_leak', f'receiver {verdict.receiver}: {leak:.3e}')
        decoders.append(w)

    if len(decoders) == USERS:
        precoders, receivers = _transceivers(it, ps, decoders)
        symbols = [unit_circle_symbols(substream(seed, 'symbols', k), alloc.dbar) for k in range(USERS)]
        xs = [precoders[k] @ symbols[k] for k in range(USERS)]
        ys = apply_channel(cs, xs, noise_std=0.0)
        for k in range(USERS):
            error = float(np.max(np.abs(receivers[k] @ ys[k] - symbols[k]), initial=0.0))
            result.receivers[k].max_symbol_error = error
            if error > options.decode_tol:
                result.add_problem('decode_error', f'receiver {k}: {error:.3e}')
        if options.snr_db is not None:
            noise_std = 10 ** (-options.snr_db / 20)
            noisy = apply_channel(cs, xs, noise_std=noise_std, seed=seed)
            result.snr_symbol_error = max(
                float(np.max(np.abs(receivers[k] @ noisy[k] - symbols[k]), initial=0.0)) for k in range(USERS)
            )

    result.passed = not result.problems
    return result


def run_trial(params: SystemParams, seed: int, index: int = 0, options: Optional[TrialOptions] = None,
              channel_factory: Optional[ChannelFactory] = None) -> TrialResult:
    """Расширение на q, генерация каналов и полный прогон."""
    options = options or TrialOptions()
    scaled = scale(params, spatial_extension_factor(derive(params)))
    try:
        if channel_factory is not None:
            cs = channel_factory(scaled, seed)
        else:
            cs = generate(scaled, options.provenance, seed, options.delta)
    except DofError as e:
        result = TrialResult(index=index, seed=seed)
        result.add_problem(getattr(e, 'tag', 'invalid_input'), str(e))
        return result
    return run_pipeline(cs, seed, index, options)


# ---------- Отчёт -----------------------------------------------------------------------


@dataclass
class ProblemItem:
    trial: int
    code: str
    detail: str = ''


@dataclass
class ReceiverSummary:
    receiver: int
    z_measured: Set[int] = field(default_factory=set)
    z_predicted: Set[int] = field(default_factory=set)
    decodable: bool = True
    max_symbol_error: float = 0.0
    max_interference_residual: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'receiver': self.receiver,
            'z_measured': sorted(self.z_measured),
            'z_predicted': sorted(self.z_predicted),
            'decodable': self.decodable,
            'max_symbol_error': self.max_symbol_error,
            'max_interference_residual': self.max_interference_residual,
        }


@dataclass
class VerificationReport:
    params: SystemParams
    scaled_params: SystemParams
    q: int
    dbar: Fraction
    regime: str
    branch: str
    p: Any
    provenance: str
    seed: int
    trials: int = 0
    passed_trials: int = 0
    streams_per_user: Set[int] = field(default_factory=set)
    receivers: List[ReceiverSummary] = field(default_factory=lambda: [ReceiverSummary(k) for k in range(USERS)])
    max_symbol_error: float = 0.0
    max_interference_residual: float = 0.0
    max_zero_block_residual: float = 0.0
    max_chain_residual: float = 0.0
    chain_null_dims: Set[int] = field(default_factory=set)
    snr_db: Optional[float] = None
    max_snr_symbol_error: Optional[float] = None

    errors: Set[str] = field(default_factory=set)
    problems: List[ProblemItem] = field(default_factory=list)

    @classmethod
    def start(cls, params: SystemParams, provenance: str, seed: int, q: Optional[int] = None,
              snr_db: Optional[float] = None) -> 'VerificationReport':
        derived = derive(params)
        if q is None:
            q = spatial_extension_factor(derived)
        scaled = scale(params, q)
        working = scaled.reciprocal() if scaled.mt > scaled.mr else scaled
        plan = plan_allocation(derive(working))
        return cls(
            params=params, scaled_params=scaled, q=q, dbar=derived.dbar,
            regime=derived.regime.value, branch=plan.branch.value, p=derived.p_label,
            provenance=provenance, seed=seed, snr_db=snr_db,
        )

    def add_problem(self, trial: int, code: str, detail: str = '') -> None:
        self.problems.append(ProblemItem(trial=trial, code=code, detail=detail))
        self.errors.add(code)

    def add_trial(self, result: TrialResult) -> None:
        self.trials += 1
        if result.passed:
            self.passed_trials += 1
        else:
            logger.warning(f'trial {result.index} (seed {result.seed}) failed: '
                           f'{sorted({code for code, _ in result.problems})}')
        for code, detail in result.problems:
            self.add_problem(result.index, code, detail)
        if result.streams_per_user:
            self.streams_per_user.add(result.streams_per_user)
        for receiver in result.receivers:
            summary = self.receivers[receiver.receiver]
            summary.z_measured.add(receiver.z_measured)
            summary.z_predicted.add(receiver.z_predicted)
            summary.decodable = summary.decodable and receiver.decodable and receiver.rank_ok
            if receiver.max_symbol_error is not None:
                summary.max_symbol_error = max(summary.max_symbol_error, receiver.max_symbol_error)
                self.max_symbol_error = max(self.max_symbol_error, receiver.max_symbol_error)
            if receiver.interference_residual is not None:
                summary.max_interference_residual = max(summary.max_interference_residual,
                                                        receiver.interference_residual)
                self.max_interference_residual = max(self.max_interference_residual,
                                                     receiver.interference_residual)
        if result.max_zero_block_residual is not None:
            self.max_zero_block_residual = max(self.max_zero_block_residual, result.max_zero_block_residual)
        if result.max_chain_residual is not None:
            self.max_chain_residual = max(self.max_chain_residual, result.max_chain_residual)
        self.chain_null_dims.update(result.chain_null_dims)
        if result.snr_symbol_error is not None:
            self.max_snr_symbol_error = max(self.max_snr_symbol_error or 0.0, result.snr_symbol_error)

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.passed_trials == self.trials

    @property
    def pass_rate(self) -> float:
        return self.passed_trials / self.trials if self.trials else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'version': __version__,
            'params': self.params.to_dict(),
            'scaled_params': self.scaled_params.to_dict(),
            'q': self.q,
            'dbar': fraction_str(self.dbar),
            'regime': self.regime,
            'branch': self.branch,
            'p': self.p,
            'provenance': self.provenance,
            'seed': self.seed,
            'trials': self.trials,
            'passed_trials': self.passed_trials,
            'pass_rate': self.pass_rate,
            'pass': self.passed,
            'streams_per_user': sorted(self.streams_per_user),
            'receivers': [summary.to_dict() for summary in self.receivers],
            'max_symbol_error': self.max_symbol_error,
            'max_interference_residual': self.max_interference_residual,
            'max_zero_block_residual': self.max_zero_block_residual,
            'max_chain_residual': self.max_chain_residual,
            'chain_null_dims': sorted(self.chain_null_dims),
            'snr_db': self.snr_db,
            'max_snr_symbol_error': self.max_snr_symbol_error,
            'errors': sorted(self.errors),
            'problems': [
                {'trial': p.trial, 'code': p.code, 'detail': p.detail}
                for p in sorted(self.problems, key=lambda p: (p.trial, p.code, p.detail))
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


# ---------- Прогоны ------------------------------------------------------------------------

TrialRunner = Callable[[SystemParams, Sequence[Tuple[int, int]], TrialOptions], Iterable[TrialResult]]
ProgressCallback = Callable[[int, int], None]


def end_to_end_trial(params: SystemParams, provenance: str = PROVENANCE_GENERIC, seed: int = 0,
                     options: Optional[TrialOptions] = None,
                     channel_factory: Optional[ChannelFactory] = None) -> VerificationReport:
    """Один прогон с данным seed, оформленный как отчёт."""
    options = options or TrialOptions(provenance=provenance)
    options.provenance = provenance
    report = VerificationReport.start(params, provenance, seed, snr_db=options.snr_db)
    report.add_trial(run_trial(params, seed, 0, options, channel_factory))
    return report


def verify_channels(cs: ChannelSet, seed: int = 0, options: Optional[TrialOptions] = None) -> VerificationReport:
    """Прогон схемы на заданных каналах (импорт, опубликованный пример). Расширение не применяется."""
    options = options or TrialOptions(provenance=cs.provenance.kind)
    report = VerificationReport.start(cs.params, cs.provenance.kind, seed, q=1, snr_db=options.snr_db)
    report.add_trial(run_pipeline(cs, seed, 0, options))
    return report


def monte_carlo(params: SystemParams, trials: int, seed: int, provenance: str = PROVENANCE_GENERIC,
                options: Optional[TrialOptions] = None, channel_factory: Optional[ChannelFactory] = None,
                runner: Optional[TrialRunner] = None,
                progress: Optional[ProgressCallback] = None) -> VerificationReport:
    """
    Независимые прогоны с под-seed'ами (seed, i). Результаты сводятся
    в порядке индексов, поэтому отчёт не зависит от порядка исполнения.

    progress(done, trials) вызывается после каждого прогона в процессе;
    внешний runner сообщает только о завершении всей пачки.
    """
    if trials < 1:
        raise InvalidInputError(f'trials must be positive, got {trials}')
    options = options or TrialOptions(provenance=provenance)
    options.provenance = provenance
    jobs = list(enumerate(trial_seeds(seed, trials)))

    if runner is not None:
        if channel_factory is not None:
            raise InvalidInputError('custom channel factories run only in-process')
        results = list(runner(params, jobs, options))
        if progress is not None:
            progress(len(results), trials)
    else:
        results = []
        for index, trial_seed in jobs:
            results.append(run_trial(params, trial_seed, index, options, channel_factory))
            if progress is not None:
                progress(len(results), trials)

    report = VerificationReport.start(params, provenance, seed, snr_db=options.snr_db)
    for result in sorted(results, key=lambda r: r.index):
        report.add_trial(result)
    logger.info(f'{params.as_tuple()}: {report.passed_trials}/{report.trials} trials passed '
                f'(q={report.q}, branch={report.branch})')
    return report
