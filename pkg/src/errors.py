"""
Исключения проекта.

Каждый класс несёт код выхода, который возвращает CLI.
"""

from typing import Iterable, Optional


class OdmtsError(Exception):
    """Базовое исключение."""
    exit_code = 1


class InvalidArgumentError(OdmtsError, ValueError):
    """Некорректный аргумент операции."""
    exit_code = 2


class DataError(OdmtsError, ValueError):
    """Отсутствующие или противоречивые входные данные."""
    exit_code = 2


class InstanceValidationError(DataError):
    """
    Нарушение схемы или инвариантов экземпляра.

    Attributes:
        offenders: список нарушений (по одной строке на нарушение)
        field_path: путь к полю в JSON-документе (для ошибок схемы)
    """

    def __init__(self, message: str, offenders: Iterable[str] = (), field_path: Optional[str] = None):
        self.offenders = list(offenders)
        self.field_path = field_path
        details = message
        if field_path:
            details = f"{details} (поле: {field_path})"
        if self.offenders:
            details = details + "\n  - " + "\n  - ".join(self.offenders)
        super().__init__(details)


class ResourceLimitError(OdmtsError):
    """Превышен ограничитель ресурсов (число путей, размер модели, перебор оракула)."""
    exit_code = 3


class ModelBuildError(OdmtsError):
    """Несогласованные входы построителя модели."""
    exit_code = 1


class SolverLimitError(OdmtsError):
    """Решатель остановился по лимиту без допустимого решения."""
    exit_code = 4


class InternalError(OdmtsError):
    """Нарушение инварианта, невозможное по построению."""
    exit_code = 1
