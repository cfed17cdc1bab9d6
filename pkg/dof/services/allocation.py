"""
Распределение символов по блокам head/middle/tail и коэффициент
пространственного расширения q. Только рациональная арифметика, без матриц.
"""
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from math import lcm
from typing import Optional, Tuple

from dof.exceptions import AllocationError, ConstructionError
from dof.services.inner_transforms import BlockSizes
from dof.services.params import BindingTerm, DerivedParams, Regime, fraction_str


class Branch(str, Enum):
    LOW_FULL = 'LowFull'
    LOW_DIRECT_LIMITED = 'LowDirectLimited'
    HIGH_HALF_N = 'HighHalfN'
    HIGH_P1 = 'HighP1'
    HIGH_CHAIN_N = 'HighChainN'
    HIGH_CHAIN_M = 'HighChainM'
    HIGH_CYCLE = 'HighCycle'
    HIGH_DIRECT_LIMITED = 'HighDirectLimited'


class MiddleDesign(str, Enum):
    EMPTY = 'empty'
    RANDOM = 'random'
    CHAINS = 'chains'
    CHAIN_GROUPS = 'chain_groups'
    CYCLE = 'cycle'


@dataclass(frozen=True)
class SymbolAllocation:
    """
    Число символов на пользователя в каждом блоке (одинаково для всех
    пользователей). На этапе плана значения рациональные, после
    allocate_symbols - целые.
    """
    branch: Branch
    middle: MiddleDesign
    regime: Regime
    dbar: Fraction
    dh: Fraction
    dm: Fraction
    dt_: Fraction
    caps: BlockSizes
    p: Optional[int] = None
    r: Optional[Fraction] = None
    r_prime: Optional[Fraction] = None
    r_hat: Optional[Fraction] = None
    base_branch: Optional[Branch] = None

    @property
    def total(self):
        return self.dh + self.dm + self.dt_

    def quantities(self) -> Tuple[Fraction, ...]:
        values = [self.dh, self.dm, self.dt_]
        values += [v for v in (self.r, self.r_prime, self.r_hat) if v is not None]
        return tuple(Fraction(v) for v in values)

    @property
    def is_integral(self) -> bool:
        return all(v.denominator == 1 for v in self.quantities() + (Fraction(self.dbar),))

    @property
    def aligned_dims(self):
        """Сколько измерений среднего блока совпадает у двух мешающих на каждом приёмнике."""
        if self.middle == MiddleDesign.CHAINS:
            return (self.p - 1) * self.r
        if self.middle == MiddleDesign.CHAIN_GROUPS:
            return (self.p - 1) * self.r_prime + (self.p - 2) * self.r_hat
        if self.middle == MiddleDesign.CYCLE:
            return self.dm
        return 0

    def as_integers(self) -> 'SymbolAllocation':
        def to_int(value):
            return None if value is None else int(value)
        return replace(
            self, dbar=int(self.dbar), dh=int(self.dh), dm=int(self.dm), dt_=int(self.dt_),
            r=to_int(self.r), r_prime=to_int(self.r_prime), r_hat=to_int(self.r_hat),
        )

    def to_dict(self):
        def render(value):
            return None if value is None else fraction_str(value)
        return {
            'branch': self.branch.value,
            'base_branch': self.base_branch.value if self.base_branch else None,
            'middle': self.middle.value,
            'dh': render(self.dh),
            'dm': render(self.dm),
            'dt': render(self.dt_),
            'p': self.p,
            'r': render(self.r),
            'r_prime': render(self.r_prime),
            'r_hat': render(self.r_hat),
        }


def _reduce(values: Tuple[Fraction, Fraction, Fraction], excess: Fraction) -> Tuple[Fraction, Fraction, Fraction]:
    """Снимает excess символов: сначала с хвоста, потом с головы, потом с середины."""
    dh, dm, dt_ = values
    take = min(dt_, excess)
    dt_, excess = dt_ - take, excess - take
    take = min(dh, excess)
    dh, excess = dh - take, excess - take
    take = min(dm, excess)
    dm, excess = dm - take, excess - take
    return dh, dm, dt_


def plan_allocation(derived: DerivedParams) -> SymbolAllocation:
    """
    Рациональный план распределения символов для параметров derived.
    Ветвь с ограничением прямыми линиями выбирается только при строгом
    D_0 < интерференционного значения.
    """
    params = derived.params
    m, n, dt = derived.m, derived.n, derived.dt
    d1, d2 = params.d1, params.d2
    dbar = derived.dbar

    if derived.regime == Regime.LOW:
        caps = BlockSizes(d2, m - dt, d1)
        half = Fraction(n - m + dt, 2)
        dh = min(Fraction(d2), half)
        dm = Fraction(m - dt)
        dt_ = min(Fraction(d1), half - dh)
        limited = dbar < Fraction(n + m - dt, 2)
        dh, dm, dt_ = _reduce((dh, dm, dt_), dh + dm + dt_ - dbar)
        return SymbolAllocation(
            branch=Branch.LOW_DIRECT_LIMITED if limited else Branch.LOW_FULL,
            middle=MiddleDesign.RANDOM, regime=Regime.LOW, dbar=dbar,
            dh=dh, dm=dm, dt_=dt_, caps=caps,
        )

    caps = BlockSizes(m - d1, dt - m, m - d2)
    target = derived.interference_limited_dbar
    base = derived.interference_limited_binding
    p = derived.p
    r = r_prime = r_hat = None

    if base == BindingTerm.HALF_N:
        dh = min(Fraction(m - d1), Fraction(n, 2))
        dt_ = Fraction(n, 2) - dh
        dm = Fraction(0)
        branch, middle = Branch.HIGH_HALF_N, MiddleDesign.EMPTY
        if dt_ > caps.tail:
            # M = N и D_t > 3M/2: половина N не помещается в голову и хвост
            dh, dt_ = Fraction(caps.head), Fraction(caps.tail)
            dm = target - (2 * m - dt)
            branch, middle = Branch.HIGH_CYCLE, MiddleDesign.CYCLE
    else:
        dh, dt_ = Fraction(m - d1), Fraction(m - d2)
        dm = target - (2 * m - dt)
        if p == 1:
            branch, middle = Branch.HIGH_P1, MiddleDesign.RANDOM
        elif base == BindingTerm.CHAIN_N:
            branch, middle = Branch.HIGH_CHAIN_N, MiddleDesign.CHAINS
            r = Fraction(n - 4 * m + 2 * dt, 2 * p + 1)
        else:
            branch, middle = Branch.HIGH_CHAIN_M, MiddleDesign.CHAIN_GROUPS
            r_prime = Fraction(dt - (p - 1) * n + (p - 2) * m)
            r_hat = derived.d_star - dt

    base_branch = None
    if dbar < target:
        dh, dm_reduced, dt_ = _reduce((dh, dm, dt_), target - dbar)
        if middle == MiddleDesign.CHAINS:
            r = dm_reduced / p
        elif middle == MiddleDesign.CHAIN_GROUPS:
            # сначала сокращается вторая группа цепочек
            if dm_reduced >= p * r_prime:
                r_hat = (dm_reduced - p * r_prime) / (p - 1)
            else:
                r_hat, r_prime = Fraction(0), dm_reduced / p
        dm = dm_reduced
        base_branch, branch = branch, Branch.HIGH_DIRECT_LIMITED

    return SymbolAllocation(
        branch=branch, middle=middle, regime=Regime.HIGH, dbar=dbar,
        dh=dh, dm=dm, dt_=dt_, caps=caps, p=p,
        r=r, r_prime=r_prime, r_hat=r_hat, base_branch=base_branch,
    )


def allocate_symbols(derived: DerivedParams) -> SymbolAllocation:
    """Целочисленное распределение; нецелые блоки означают, что не применено расширение."""
    plan = plan_allocation(derived)
    if not plan.is_integral:
        q = lcm(*(value.denominator for value in plan.quantities() + (Fraction(plan.dbar),)))
        raise AllocationError(
            f'allocation for {derived.params.as_tuple()} is not integral '
            f'(dbar={fraction_str(derived.dbar)}); apply spatial extension by q={q}',
            q=q,
        )
    alloc = plan.as_integers()
    caps = alloc.caps
    if alloc.total != alloc.dbar or alloc.dh > caps.head or alloc.dm > caps.middle or alloc.dt_ > caps.tail \
            or min(alloc.dh, alloc.dm, alloc.dt_) < 0:
        raise ConstructionError(
            f'allocation {alloc.to_dict()} violates block capacities {caps.as_tuple()}',
            tag='allocation_infeasible',
        )
    return alloc


def spatial_extension_factor(derived: DerivedParams) -> int:
    """
    Наименьшее q, при котором q·dbar и все размеры блоков схемы (|d_kh|, |d_km|,
    |d_kt|, r, r′, r̂) целые: НОК знаменателей.
    """
    plan = plan_allocation(derived)
    quantities = (derived.dbar,) + plan.quantities()
    return lcm(*(Fraction(value).denominator for value in quantities))
