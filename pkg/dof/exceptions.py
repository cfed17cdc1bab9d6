"""Исключения расчётной части. Команды и view переводят их в коды выхода и HTTP-ответы."""
from typing import Optional


class DofError(Exception):
    """Базовая ошибка приложения."""


class InvalidInputError(DofError, ValueError):
    """Нарушены инварианты входа: параметры, размеры, нечисловые элементы матриц."""


class PreconditionError(DofError):
    """Нарушено предусловие операции (например, вложенность подпространств)."""


class ConstructionError(DofError):
    """
    Построение схемы не удалось: негенерический канал, несовпадение размерностей
    именованного блока, вырожденный прекодер.

    tag - короткий код для отчёта, block - имя блока, на котором упали.
    """
    tag = 'construction_error'

    def __init__(self, message: str, block: Optional[str] = None, tag: Optional[str] = None):
        super().__init__(message)
        self.block = block
        if tag is not None:
            self.tag = tag


class InfeasibleChainError(ConstructionError):
    tag = 'infeasible_chain'


class AllocationError(DofError):
    """Распределение символов нецелое: нужно пространственное расширение."""

    def __init__(self, message: str, q: int = 1):
        super().__init__(message)
        self.q = q


class NoDecoderError(DofError):
    """Приёмник не декодируем: zero-forcing декодер не существует."""
