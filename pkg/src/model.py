"""
Модель данных: сеть ODMTS, параметры стоимости, поездки и пути.

Все объекты неизменяемы после создания.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .config import TIME_UNITS
from .errors import DataError, InstanceValidationError, InvalidArgumentError

ArcKey = Tuple[str, str]

# Идентификаторы попадают в имена переменных MIP и должны быть допустимы в LP-формате
IDENT_RE = re.compile(r"^[A-Za-z0-9_.]+$")


class CostBasis(str, Enum):
    DISTANCE = "distance"
    TIME = "time"


class TripClass(str, Enum):
    CORE = "core"
    LATENT = "latent"


class LegKind(str, Enum):
    HUB = "hub"
    SHUTTLE = "shuttle"


@dataclass(frozen=True)
class HubArc:
    """Дуга между хабами: t'_hl, d'_hl, частота n_hl и ожидание t_hl^wait."""
    tail: str
    head: str
    time: float
    dist: float
    frequency: int
    wait: Optional[float] = None
    fixed: bool = False

    @property
    def key(self) -> ArcKey:
        return (self.tail, self.head)


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """
    Сеть ODMTS.

    Матрицы car_time/car_dist индексируются в порядке stops.
    arcs содержит все дуги-кандидаты Z (включая фиксированные).
    """
    name: str
    time_unit: str
    stops: Tuple[str, ...]
    hubs: Tuple[str, ...]
    arcs: Mapping[ArcKey, HubArc]
    car_time: np.ndarray
    car_dist: np.ndarray
    horizon: Optional[float] = None
    coords: Optional[Mapping[str, Tuple[float, float]]] = None
    distance_unit: str = "km"
    _index: Dict[str, int] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.stops)})
        offenders = self.check()
        if offenders:
            raise InstanceValidationError(f"Некорректная сеть '{self.name}'", offenders)

    def check(self) -> List[str]:
        """Возвращает список нарушений инвариантов (пустой, если сеть корректна)."""
        offenders = []
        if self.time_unit not in TIME_UNITS:
            offenders.append(f"неизвестная единица времени: {self.time_unit}")
        if len(self._index) != len(self.stops):
            offenders.append("повторяющиеся идентификаторы остановок")
        for s in self.stops:
            if not IDENT_RE.match(s):
                offenders.append(f"идентификатор остановки '{s}': допустимы латиница, цифры, '_' и '.'")
        hubs = set(self.hubs)
        for h in sorted(hubs - set(self._index)):
            offenders.append(f"хаб {h} отсутствует среди остановок")
        n = len(self.stops)
        for name, matrix in (("car_time", self.car_time), ("car_dist", self.car_dist)):
            if matrix.shape != (n, n):
                offenders.append(f"{name}: размер {matrix.shape}, ожидался {(n, n)}")
            elif not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
                offenders.append(f"{name}: значения должны быть конечными и неотрицательными")
        for (h, l), arc in self.arcs.items():
            if (arc.tail, arc.head) != (h, l):
                offenders.append(f"дуга {h}->{l}: ключ не совпадает с концами")
            if h == l:
                offenders.append(f"петля {h}->{l}")
            if h not in hubs or l not in hubs:
                offenders.append(f"дуга {h}->{l} соединяет не хабы")
            if arc.frequency < 1:
                offenders.append(f"дуга {h}->{l}: частота должна быть >= 1")
            values = [arc.time, arc.dist] + ([arc.wait] if arc.wait is not None else [])
            if any(not np.isfinite(v) or v < 0 for v in values):
                offenders.append(f"дуга {h}->{l}: время и расстояние должны быть >= 0")
            if arc.wait is None and not self.horizon:
                offenders.append(f"дуга {h}->{l}: нет ожидания и не задан горизонт")
        # Фиксированные дуги сами по себе должны быть сбалансированы,
        # иначе дизайн "только фиксированные дуги" недопустим.
        balance = {h: 0 for h in hubs}
        for (h, l) in self.fixed_arcs:
            if h in balance and l in balance:
                balance[h] += 1
                balance[l] -= 1
        for h in sorted(h for h, b in balance.items() if b != 0):
            offenders.append(f"фиксированные дуги не сбалансированы в хабе {h}")
        return offenders

    @property
    def fixed_arcs(self) -> FrozenSet[ArcKey]:
        return frozenset(k for k, a in self.arcs.items() if a.fixed)

    @property
    def candidate_arcs(self) -> Tuple[ArcKey, ...]:
        return tuple(sorted(self.arcs))

    @property
    def undecided_arcs(self) -> Tuple[ArcKey, ...]:
        return tuple(sorted(k for k, a in self.arcs.items() if not a.fixed))

    def has_stop(self, stop: str) -> bool:
        return stop in self._index

    def stop_index(self, stop: str) -> int:
        try:
            return self._index[stop]
        except KeyError:
            raise DataError(f"Неизвестная остановка: {stop}") from None

    def arc(self, h: str, l: str) -> HubArc:
        try:
            return self.arcs[(h, l)]
        except KeyError:
            raise InvalidArgumentError(f"Дуга {h}->{l} не входит в множество кандидатов") from None

    def wait_time(self, h: str, l: str) -> float:
        """Ожидание на дуге; если не задано: половина интервала движения."""
        arc = self.arc(h, l)
        if arc.wait is not None:
            return arc.wait
        return self.horizon / (2 * arc.frequency)

    def car_time_between(self, i: str, j: str) -> float:
        return float(self.car_time[self.stop_index(i), self.stop_index(j)])

    def car_dist_between(self, i: str, j: str) -> float:
        return float(self.car_dist[self.stop_index(i), self.stop_index(j)])


@dataclass(frozen=True)
class CostParameters:
    """Параметры взвешенной стоимости: theta, тарифы автобуса и шаттла, плата за проезд."""
    theta: float
    b_dist: float = 0.0
    b_time: float = 0.0
    w_dist: float = 0.0
    w_time: float = 0.0
    phi: float = 0.0
    cost_basis: CostBasis = CostBasis.DISTANCE

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidArgumentError(f"theta должна лежать в [0, 1], получено {self.theta}")
        rates = {"b_dist": self.b_dist, "b_time": self.b_time, "w_dist": self.w_dist,
                 "w_time": self.w_time, "phi": self.phi}
        negative = [k for k, v in rates.items() if v < 0]
        if negative:
            raise InvalidArgumentError(f"Параметры должны быть неотрицательными: {negative}")
        object.__setattr__(self, "cost_basis", CostBasis(self.cost_basis))


@dataclass(frozen=True)
class Trip:
    """Поездка r: пара O-D, число пассажиров p^r и параметры модели выбора."""
    id: str
    origin: str
    destination: str
    riders: int
    trip_class: TripClass = TripClass.CORE
    alpha: Optional[float] = None
    t_cur: Optional[float] = None
    transfer_tolerance: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "trip_class", TripClass(self.trip_class))
        offenders = []
        if not IDENT_RE.match(self.id):
            offenders.append("идентификатор: допустимы латиница, цифры, '_' и '.'")
        if self.origin == self.destination:
            offenders.append("начало совпадает с концом")
        if self.riders < 1:
            offenders.append("число пассажиров должно быть >= 1")
        if self.is_latent:
            if self.alpha is None or self.alpha <= 0:
                offenders.append("у латентной поездки alpha должна быть > 0")
            if self.t_cur is None or self.t_cur <= 0:
                offenders.append("у латентной поездки t_cur должно быть > 0")
            if self.transfer_tolerance is not None and self.transfer_tolerance < 0:
                offenders.append("допуск пересадок должен быть >= 0")
        if offenders:
            raise InstanceValidationError(f"Некорректная поездка {self.id}", offenders)

    @property
    def is_latent(self) -> bool:
        return self.trip_class == TripClass.LATENT


def check_trips(instance: NetworkInstance, trips: Iterable[Trip]) -> List[str]:
    """Проверяет ссылки поездок на остановки и уникальность идентификаторов."""
    offenders = []
    seen = set()
    for trip in trips:
        if trip.id in seen:
            offenders.append(f"повторяющийся идентификатор поездки {trip.id}")
        seen.add(trip.id)
        for stop in (trip.origin, trip.destination):
            if not instance.has_stop(stop):
                offenders.append(f"поездка {trip.id}: неизвестная остановка {stop}")
    return offenders


@dataclass(frozen=True)
class Leg:
    tail: str
    head: str
    kind: LegKind

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.tail, self.head, self.kind.value)


@dataclass(frozen=True)
class Path:
    """
    Путь поездки: последовательность ног (хабовых и шаттловых).

    weighted_cost = g(pi), duration = t_pi в единицах таблиц стоимости,
    из которых путь построен.
    """
    trip_id: str
    legs: Tuple[Leg, ...]
    weighted_cost: float
    duration: float

    def __post_init__(self):
        problem = _path_problem(self.legs)
        if problem:
            raise InvalidArgumentError(f"Некорректный путь поездки {self.trip_id}: {problem}")

    @property
    def origin(self) -> str:
        return self.legs[0].tail

    @property
    def destination(self) -> str:
        return self.legs[-1].head

    @property
    def transfers(self) -> int:
        return len(self.legs) - 1

    @property
    def hub_legs(self) -> FrozenSet[ArcKey]:
        """x(pi)."""
        return frozenset((leg.tail, leg.head) for leg in self.legs if leg.kind == LegKind.HUB)

    @property
    def shuttle_legs(self) -> FrozenSet[ArcKey]:
        """y(pi)."""
        return frozenset((leg.tail, leg.head) for leg in self.legs if leg.kind == LegKind.SHUTTLE)

    @property
    def key(self) -> Tuple[Tuple[str, str, str], ...]:
        return tuple(leg.key for leg in self.legs)

    @property
    def nodes(self) -> Tuple[str, ...]:
        return (self.legs[0].tail,) + tuple(leg.head for leg in self.legs)

    def describe(self) -> str:
        parts = [self.origin]
        for leg in self.legs:
            arrow = "=>" if leg.kind == LegKind.HUB else "->"
            parts.append(f"{arrow}{leg.head}")
        return "".join(parts)


def _path_problem(legs: Tuple[Leg, ...]) -> Optional[str]:
    if not legs:
        return "пустой путь"
    for prev, nxt in zip(legs, legs[1:]):
        if prev.head != nxt.tail:
            return f"разрыв между {prev.head} и {nxt.tail}"
    last = len(legs) - 1
    for pos, leg in enumerate(legs):
        if leg.kind == LegKind.SHUTTLE and pos not in (0, last):
            return "шаттл допускается только первой или последней ногой"
    if len(legs) == 2 and all(leg.kind == LegKind.SHUTTLE for leg in legs):
        return "путь из двух шаттлов без хабовых ног"
    nodes = [legs[0].tail] + [leg.head for leg in legs]
    if len(set(nodes)) != len(nodes):
        return "путь не простой"
    return None
