"""
Кривые dbar/N как функции M/N при D_0 = M для нескольких D_t.

D_t задаётся линейным выражением от M и N ("0", "M/2", "3M/2", "N-M", "2").
Точки с рациональными M и D_t считаются точно: формула DoF однородна,
поэтому кортеж масштабируется до целого.
"""
import csv
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import IO, Iterable, List, Sequence

from dof.exceptions import InvalidInputError
from dof.services.params import SystemParams, derive, render_decimal

logger = logging.getLogger(__name__)

DEFAULT_DT_LIST = '0,M/2,M,3M/2,2M'
CSV_HEADER = ('m_over_n', 'dt_spec', 'dbar_over_n')

_TERM = re.compile(r'\s*([+-])?\s*(\d+)?\s*\*?\s*([MN])?\s*(?:/\s*(\d+))?\s*')


@dataclass(frozen=True)
class DtSpec:
    label: str
    m_coef: Fraction
    n_coef: Fraction
    const: Fraction

    def evaluate(self, m: Fraction, n: Fraction) -> Fraction:
        return self.m_coef * m + self.n_coef * n + self.const

    @classmethod
    def parse(cls, text: str) -> 'DtSpec':
        label = text.strip()
        if not label:
            raise InvalidInputError('empty D_t spec')
        coefs = {'M': Fraction(0), 'N': Fraction(0), '': Fraction(0)}
        pos = 0
        while pos < len(label):
            match = _TERM.match(label, pos)
            sign, number, var, den = match.groups()
            if match.end() == pos or (number is None and var is None):
                raise InvalidInputError(f'cannot parse D_t spec {label!r} at position {pos}')
            if pos > 0 and sign is None:
                raise InvalidInputError(f'missing operator in D_t spec {label!r} at position {pos}')
            if den is not None and int(den) == 0:
                raise InvalidInputError(f'division by zero in D_t spec {label!r}')
            value = Fraction(int(number) if number else 1, int(den) if den else 1)
            coefs[var or ''] += -value if sign == '-' else value
            pos = match.end()
        return cls(label=label, m_coef=coefs['M'], n_coef=coefs['N'], const=coefs[''])


def parse_dt_list(text: str) -> List[DtSpec]:
    specs = [DtSpec.parse(part) for part in text.split(',') if part.strip()]
    if not specs:
        raise InvalidInputError('D_t list is empty')
    return specs


def exact_dbar(m: Fraction, n: Fraction, dt: Fraction) -> Fraction:
    """
    dbar для D_0 = M и D_1 = D_2 = D_t/2 при рациональных M, N, D_t.
    Кортеж домножается на НОК знаменателей и результат делится обратно.
    """
    m, n, dt = Fraction(m), Fraction(n), Fraction(dt)
    if not (0 < m <= n and 0 <= dt <= 2 * m):
        raise InvalidInputError(f'point M={m}, N={n}, D_t={dt} is outside 0 < M <= N, 0 <= D_t <= 2M')
    half = dt / 2
    factor = lcm(m.denominator, n.denominator, half.denominator)
    params = SystemParams(int(m * factor), int(n * factor), int(m * factor), int(half * factor), int(half * factor))
    return derive(params).dbar / factor


@dataclass(frozen=True)
class SweepRow:
    m_over_n: Fraction
    dt_spec: str
    dbar_over_n: Fraction

    def as_csv(self) -> List[str]:
        return [render_decimal(self.m_over_n), self.dt_spec, render_decimal(self.dbar_over_n)]


def sweep_rows(n: int, grid: int, dt_specs: Sequence[DtSpec]) -> List[SweepRow]:
    """M = N·i/grid для i = 1..grid; точки с D_t вне [0, 2M] пропускаются."""
    if n < 2:
        raise InvalidInputError(f'N must be at least 2, got {n}')
    if grid < 1:
        raise InvalidInputError(f'grid must be positive, got {grid}')
    rows = []
    for step in range(1, grid + 1):
        m = Fraction(n * step, grid)
        for spec in dt_specs:
            dt = spec.evaluate(m, Fraction(n))
            if not 0 <= dt <= 2 * m:
                logger.debug(f'skip M={m}, D_t={spec.label}={dt}: outside [0, 2M]')
                continue
            rows.append(SweepRow(m_over_n=m / n, dt_spec=spec.label, dbar_over_n=exact_dbar(m, Fraction(n), dt) / n))
    return rows


def write_csv(rows: Iterable[SweepRow], stream: IO[str]) -> int:
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(CSV_HEADER)
    count = 0
    for row in rows:
        writer.writerow(row.as_csv())
        count += 1
    return count
