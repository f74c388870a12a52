"""
Модели выбора латентных пассажиров.
"""

from abc import ABC, abstractmethod
from typing import Callable, Dict, Optional

from .errors import InvalidArgumentError
from .model import Path, Trip


class ChoiceModel(ABC):
    """Детерминированный предикат C^r(pi): True: пассажир принимает путь."""

    name: str = "abstract"

    @abstractmethod
    def adopts(self, trip: Trip, path: Path) -> bool:
        ...

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class DurationOnly(ChoiceModel):
    """Принять, если t_pi <= alpha * t_cur."""

    name = "duration_only"

    def __init__(self, tolerance: float = 1e-9):
        self.tolerance = tolerance

    def adopts(self, trip: Trip, path: Path) -> bool:
        return path.duration <= trip.alpha * trip.t_cur + self.tolerance


class DurationAndTransfers(DurationOnly):
    """Дополнительно требует l_pi <= l_ub. Без l_ub у поездки ограничения на пересадки нет."""

    name = "duration_and_transfers"

    def adopts(self, trip: Trip, path: Path) -> bool:
        if trip.transfer_tolerance is not None and path.transfers > trip.transfer_tolerance:
            return False
        return super().adopts(trip, path)


class CustomChoice(ChoiceModel):
    """Произвольный предикат, заданный в коде."""

    name = "custom"

    def __init__(self, predicate: Callable[[Trip, Path], bool], label: Optional[str] = None):
        self.predicate = predicate
        self.label = label or getattr(predicate, "__name__", "custom")

    def adopts(self, trip: Trip, path: Path) -> bool:
        return bool(self.predicate(trip, path))

    def __repr__(self) -> str:
        return f"CustomChoice({self.label})"


_BY_NAME = {
    DurationOnly.name: DurationOnly,
    DurationAndTransfers.name: DurationAndTransfers,
}


def choice_model_from_spec(spec: Optional[Dict]) -> ChoiceModel:
    """
    Создаёт модель выбора по блоку choice_model файла экземпляра.

    Args:
        spec: словарь вида {"kind": "duration_and_transfers"}; None: модель по умолчанию

    Returns:
        Экземпляр ChoiceModel
    """
    if spec is None:
        return DurationAndTransfers()
    kind = spec.get("kind")
    if kind not in _BY_NAME:
        raise InvalidArgumentError(
            f"Неизвестная модель выбора '{kind}'; допустимы: {sorted(_BY_NAME)}"
        )
    return _BY_NAME[kind]()


def choice_model_to_spec(model: ChoiceModel) -> Dict:
    if isinstance(model, CustomChoice):
        raise InvalidArgumentError("Пользовательскую модель выбора нельзя сохранить в файл")
    return {"kind": model.name}
