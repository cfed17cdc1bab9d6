"""
Параметры сети и точное значение DoF на пользователя.

Вся арифметика значений DoF, p, D★ и размеров блоков рациональная (Fraction),
числа с плавающей точкой появляются только в матрицах.
"""
import operator
from dataclasses import dataclass
from decimal import Context, Decimal, ROUND_HALF_EVEN
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple

from dof.exceptions import InvalidInputError


UNBOUNDED = 'unbounded'


class Regime(str, Enum):
    LOW = 'Low'
    HIGH = 'High'


class BindingTerm(str, Enum):
    # порядок членов задаёт разрешение ничьих
    DIRECT_RANK = 'DirectRank'
    LOW_FORMULA = 'LowFormula'
    HALF_N = 'HalfN'
    CHAIN_M = 'ChainM'
    CHAIN_N = 'ChainN'


@dataclass(frozen=True)
class SystemParams:
    """Кортеж (M_T, M_R, D_0, D_1, D_2)."""
    mt: int
    mr: int
    d0: int
    d1: int
    d2: int

    def __post_init__(self):
        for name in ('mt', 'mr', 'd0', 'd1', 'd2'):
            value = getattr(self, name)
            if isinstance(value, bool):
                raise InvalidInputError(f'{name} must be an integer, got {value!r}')
            try:
                object.__setattr__(self, name, operator.index(value))
            except TypeError:
                raise InvalidInputError(f'{name} must be an integer, got {value!r}') from None

        if self.mt < 1 or self.mr < 1:
            raise InvalidInputError(f'antenna counts must be positive, got mt={self.mt}, mr={self.mr}')
        bound = min(self.mt, self.mr)
        for name in ('d0', 'd1', 'd2'):
            value = getattr(self, name)
            if not 0 <= value <= bound:
                raise InvalidInputError(f'{name}={value} must lie in [0, min(mt, mr)={bound}]')

    @property
    def m(self) -> int:
        return min(self.mt, self.mr)

    @property
    def n(self) -> int:
        return max(self.mt, self.mr)

    @property
    def dt(self) -> int:
        return self.d1 + self.d2

    def as_tuple(self) -> Tuple[int, int, int, int, int]:
        return self.mt, self.mr, self.d0, self.d1, self.d2

    def reciprocal(self) -> 'SystemParams':
        """Обратная сеть: передатчики и приёмники меняются ролями, D_1 и D_2 меняются местами."""
        return SystemParams(self.mr, self.mt, self.d0, self.d2, self.d1)

    def to_dict(self) -> Dict[str, int]:
        return {'mt': self.mt, 'mr': self.mr, 'd0': self.d0, 'd1': self.d1, 'd2': self.d2}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SystemParams':
        try:
            return cls(*(data[key] for key in ('mt', 'mr', 'd0', 'd1', 'd2')))
        except KeyError as e:
            raise InvalidInputError(f'missing parameter {e.args[0]}') from None


@dataclass(frozen=True)
class DerivedParams:
    params: SystemParams
    m: int
    n: int
    dt: int
    regime: Regime
    p: Optional[int]
    p_unbounded: bool
    dbar: Fraction
    binding: BindingTerm
    candidates: Tuple[Tuple[BindingTerm, Fraction], ...]
    d_star: Optional[Fraction] = None

    @property
    def interference_limited_dbar(self) -> Fraction:
        """Минимум без члена D_0: столько даёт схема, если прямые линии не ограничивают."""
        return min(value for term, value in self.candidates if term != BindingTerm.DIRECT_RANK)

    @property
    def interference_limited_binding(self) -> BindingTerm:
        target = self.interference_limited_dbar
        return next(term for term, value in self.candidates
                    if term != BindingTerm.DIRECT_RANK and value == target)

    @property
    def p_label(self):
        if self.p_unbounded:
            return UNBOUNDED
        return self.p

    def to_dict(self) -> Dict[str, Any]:
        return {
            'params': self.params.to_dict(),
            'm': self.m,
            'n': self.n,
            'dt': self.dt,
            'regime': self.regime.value,
            'p': self.p_label,
            'dbar': fraction_str(self.dbar),
            'dbar_decimal': render_decimal(self.dbar),
            'binding': self.binding.value,
            'd_star': fraction_str(self.d_star) if self.d_star is not None else None,
        }


def fraction_str(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f'{value.numerator}/{value.denominator}'


def render_decimal(value: Fraction, digits: int = 12) -> str:
    """Десятичная запись рационального числа: digits значащих цифр, округление half-even."""
    value = Fraction(value)
    ctx = Context(prec=digits, rounding=ROUND_HALF_EVEN)
    return format(ctx.divide(Decimal(value.numerator), Decimal(value.denominator)), 'f')


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def chain_parameter(m: int, n: int, dt: int) -> Optional[int]:
    """p = ⌈(D_t − M)/(N − M)⌉ для высокого режима; None, если M = N (p неограничен)."""
    if m == n:
        return None
    return _ceil_div(dt - m, n - m)


def d_star(p: int, m: int, n: int) -> Fraction:
    """Порог D★ = pN − (2p² − 3p + 2)/(2p − 1)·M, разделяющий ветви ChainM и ChainN."""
    return p * n - Fraction(2 * p * p - 3 * p + 2, 2 * p - 1) * m


def derive(params: SystemParams) -> DerivedParams:
    """Точное значение DoF на пользователя и режим интерференции."""
    m, n, dt = params.m, params.n, params.dt
    p = None
    p_unbounded = False
    threshold = None

    if dt <= m:
        regime = Regime.LOW
        candidates = (
            (BindingTerm.DIRECT_RANK, Fraction(params.d0)),
            (BindingTerm.LOW_FORMULA, Fraction(n + m - dt, 2)),
        )
    else:
        regime = Regime.HIGH
        p = chain_parameter(m, n, dt)
        if p is None:
            # предел p -> ∞: оба цепочечных члена стремятся к M/2 = N/2
            p_unbounded = True
            candidates = (
                (BindingTerm.DIRECT_RANK, Fraction(params.d0)),
                (BindingTerm.HALF_N, Fraction(n, 2)),
                (BindingTerm.CHAIN_M, Fraction(m, 2)),
                (BindingTerm.CHAIN_N, Fraction(n, 2)),
            )
        else:
            threshold = d_star(p, m, n)
            candidates = (
                (BindingTerm.DIRECT_RANK, Fraction(params.d0)),
                (BindingTerm.HALF_N, Fraction(n, 2)),
                (BindingTerm.CHAIN_M, Fraction(p * m, 2 * p - 1)),
                (BindingTerm.CHAIN_N, Fraction(p * n + 2 * m - dt, 2 * p + 1)),
            )

    dbar = min(value for _, value in candidates)
    binding = next(term for term, value in candidates if value == dbar)
    return DerivedParams(
        params=params, m=m, n=n, dt=dt, regime=regime, p=p, p_unbounded=p_unbounded,
        dbar=dbar, binding=binding, candidates=candidates, d_star=threshold,
    )


def scale(params: SystemParams, q: int) -> SystemParams:
    if q < 1:
        raise InvalidInputError(f'extension factor must be positive, got {q}')
    return SystemParams(*(q * value for value in params.as_tuple()))
