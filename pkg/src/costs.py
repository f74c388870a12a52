"""
Взвешенные стоимости ODMTS: beta, tau, gamma, phi_bar и метрики путей.

Все модули, потребляющие стоимости, читают их только через CostTables,
поэтому лексикографическое преобразование для них прозрачно.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from . import config
from .choice import ChoiceModel
from .errors import InvalidArgumentError
from .model import (
    ArcKey,
    CostBasis,
    CostParameters,
    Leg,
    LegKind,
    NetworkInstance,
    Path,
    Trip,
)

logger = logging.getLogger(__name__)


class PathClass(str, Enum):
    AP = "AP"    # принимает, прибыльный
    ANP = "ANP"  # принимает, неприбыльный
    RP = "RP"    # отвергает, прибыльный
    RNP = "RNP"  # отвергает, неприбыльный


def hub_leg_investment_cost(instance: NetworkInstance, params: CostParameters, h: str, l: str) -> float:
    """
    beta_hl: взвешенная стоимость открытия дуги между хабами.

    Для фиксированных дуг равна нулю.
    """
    arc = instance.arc(h, l)
    if arc.fixed:
        return 0.0
    if params.cost_basis == CostBasis.TIME:
        return (1.0 - params.theta) * arc.frequency * arc.time * params.b_time
    return (1.0 - params.theta) * arc.frequency * arc.dist * params.b_dist


def hub_leg_rider_cost(instance: NetworkInstance, params: CostParameters, h: str, l: str) -> float:
    """tau_hl = theta * (t'_hl + t_hl^wait)."""
    arc = instance.arc(h, l)
    return params.theta * (arc.time + instance.wait_time(h, l))


def hub_leg_duration(instance: NetworkInstance, h: str, l: str) -> float:
    arc = instance.arc(h, l)
    return arc.time + instance.wait_time(h, l)


def shuttle_leg_cost(instance: NetworkInstance, params: CostParameters, i: str, j: str) -> float:
    """gamma_ij: взвешенная стоимость поездки шаттлом из i в j."""
    if i == j:
        raise InvalidArgumentError(f"Шаттл из остановки {i} в неё же")
    t = instance.car_time_between(i, j)
    if params.cost_basis == CostBasis.TIME:
        return (1.0 - params.theta) * params.w_time * t + params.theta * t
    return (1.0 - params.theta) * params.w_dist * instance.car_dist_between(i, j) + params.theta * t


def fare_revenue_weight(params: CostParameters) -> float:
    """phi_bar = (1 - theta) * phi."""
    return (1.0 - params.theta) * params.phi


def path_metrics(instance: NetworkInstance, params: CostParameters, path: Path) -> Tuple[float, float, int]:
    """
    Пересчитывает (g, t, l) пути по исходным формулам.

    Returns:
        Взвешенная стоимость, длительность и число пересадок
    """
    g = 0.0
    t = 0.0
    for leg in path.legs:
        if leg.kind == LegKind.HUB:
            g += hub_leg_rider_cost(instance, params, leg.tail, leg.head)
            t += hub_leg_duration(instance, leg.tail, leg.head)
        else:
            g += shuttle_leg_cost(instance, params, leg.tail, leg.head)
            t += instance.car_time_between(leg.tail, leg.head)
    return g, t, path.transfers


def evaluate_choice(model: ChoiceModel, trip: Trip, path: Path) -> bool:
    """True: латентная поездка принимает путь, False: отвергает."""
    if not trip.is_latent:
        raise InvalidArgumentError(f"Поездка {trip.id} не латентная: модель выбора не применяется")
    return model.adopts(trip, path)


def classify_path(adopts: bool, g: float, phi_bar: float, eps: float = config.EPS) -> PathClass:
    """Прибыльный путь: g < phi_bar - eps; равенство считается неприбыльным."""
    profitable = g < phi_bar - eps
    if adopts:
        return PathClass.AP if profitable else PathClass.ANP
    return PathClass.RP if profitable else PathClass.RNP


@dataclass(frozen=True, eq=False)
class CostTables:
    """
    Предвычисленные таблицы стоимостей одного экземпляра.

    scale = 1 для обычных таблиц и M_lex после лексикографического
    преобразования; base указывает на исходные таблицы.
    Длительности (hub_duration, car_time) не масштабируются.
    """
    instance: NetworkInstance
    params: CostParameters
    beta: Dict[ArcKey, float]
    tau: Dict[ArcKey, float]
    hub_duration: Dict[ArcKey, float]
    gamma: np.ndarray
    phi_bar: float
    scale: float = 1.0
    base: Optional["CostTables"] = None

    @classmethod
    def build(cls, instance: NetworkInstance, params: CostParameters) -> "CostTables":
        beta, tau, duration = {}, {}, {}
        for h, l in instance.candidate_arcs:
            beta[(h, l)] = hub_leg_investment_cost(instance, params, h, l)
            tau[(h, l)] = hub_leg_rider_cost(instance, params, h, l)
            duration[(h, l)] = hub_leg_duration(instance, h, l)
        if params.cost_basis == CostBasis.TIME:
            shuttle_rate = (1.0 - params.theta) * params.w_time * instance.car_time
        else:
            shuttle_rate = (1.0 - params.theta) * params.w_dist * instance.car_dist
        gamma = shuttle_rate + params.theta * instance.car_time
        return cls(instance, params, beta, tau, duration, gamma, fare_revenue_weight(params))

    @property
    def original(self) -> "CostTables":
        return self.base if self.base is not None else self

    @property
    def is_lex(self) -> bool:
        return self.base is not None

    @property
    def eps(self) -> float:
        """Допуск сравнения стоимостей в единицах этих таблиц."""
        return config.EPS * max(1.0, self.scale)

    @property
    def duration_bound(self) -> float:
        """Верхняя оценка длительности любого простого пути."""
        return 2.0 * float(np.max(self.instance.car_time, initial=0.0)) + sum(self.hub_duration.values())

    def shuttle_cost(self, i: str, j: str) -> float:
        if i == j:
            raise InvalidArgumentError(f"Шаттл из остановки {i} в неё же")
        inst = self.instance
        return float(self.gamma[inst.stop_index(i), inst.stop_index(j)])

    def shuttle_duration(self, i: str, j: str) -> float:
        return self.instance.car_time_between(i, j)

    def leg_cost(self, leg: Leg) -> float:
        if leg.kind == LegKind.HUB:
            return self.tau[(leg.tail, leg.head)]
        return self.shuttle_cost(leg.tail, leg.head)

    def leg_duration(self, leg: Leg) -> float:
        if leg.kind == LegKind.HUB:
            return self.hub_duration[(leg.tail, leg.head)]
        return self.shuttle_duration(leg.tail, leg.head)

    def make_path(self, trip_id: str, legs: Sequence[Leg]) -> Path:
        """Собирает Path, суммируя стоимости ног слева направо."""
        g = 0.0
        t = 0.0
        for leg in legs:
            g += self.leg_cost(leg)
            t += self.leg_duration(leg)
        return Path(trip_id, tuple(legs), g, t)

    def reprice(self, path: Path) -> Path:
        return self.make_path(path.trip_id, path.legs)

    def classify(self, adopts: bool, path: Path) -> PathClass:
        return classify_path(adopts, path.weighted_cost, self.phi_bar, self.eps)

    def investment(self, open_arcs: Iterable[ArcKey]) -> float:
        return sum(self.beta[arc] for arc in open_arcs)


def lex_scale(instance: NetworkInstance, margin: int = config.LEX_SCALE_MARGIN) -> float:
    """M_lex = 10^(ceil(log10(T_max)) + margin), T_max: оценка длительности пути."""
    bound = CostTables.build(instance, CostParameters(theta=1.0)).duration_bound
    return 10.0 ** (math.ceil(math.log10(max(bound, 1.0))) + margin)


def apply_lex_transform(params: CostParameters, instance: NetworkInstance,
                        m_lex: Optional[float] = None) -> CostTables:
    """
    Лексикографическое преобразование стоимостей.

    tau^ = M*tau + t' + wait, gamma^ = M*gamma + t, beta^ = M*beta, phi^ = M*phi_bar.
    Минимизация g^ даёт те же argmin-пути, что и порядок <g, t>,
    если различные значения g отстоят дальше T_max / M (см. check_lex_resolution).
    """
    if m_lex is None:
        m_lex = lex_scale(instance)
    if not m_lex > 0:
        raise InvalidArgumentError(f"M_lex должно быть положительным, получено {m_lex}")
    base = CostTables.build(instance, params)
    tables = CostTables(
        instance=instance,
        params=params,
        beta={arc: m_lex * v for arc, v in base.beta.items()},
        tau={arc: m_lex * base.tau[arc] + base.hub_duration[arc] for arc in base.tau},
        hub_duration=dict(base.hub_duration),
        gamma=m_lex * base.gamma + instance.car_time,
        phi_bar=m_lex * base.phi_bar,
        scale=m_lex,
        base=base,
    )
    logger.info(f"Лексикографическое преобразование: M_lex={m_lex:g}")
    return tables
