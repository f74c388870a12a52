"""
Ответ пассажиров на дизайн сети и точный переборный оракул двухуровневой задачи.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence

from tqdm import tqdm

from . import config
from .choice import ChoiceModel
from .costs import CostTables, PathClass, lex_scale
from .errors import InternalError, ResourceLimitError
from .model import ArcKey, Path, Trip
from .preprocess import Removal, compute_bounds
from .trip_graph import build_trip_graph, enumerate_simple_paths, k_shortest_paths

logger = logging.getLogger(__name__)


class FollowerMode(str, Enum):
    GENERALIZED = "generalized"
    LEX = "lex"


@dataclass
class TripOutcome:
    trip_id: str
    latent: bool
    riders: int
    path: Path
    adopts: Optional[bool]
    term: float
    removed: bool = False

    @property
    def shuttle_only(self) -> bool:
        return not self.path.hub_legs


@dataclass
class DesignSolution:
    """
    Дизайн и ответ пассажиров.

    objective и слагаемые: в исходных единицах стоимости;
    scaled_objective: в единицах таблиц, на которых строилась модель.
    """
    open_arcs: List[ArcKey]
    outcomes: Dict[str, TripOutcome]
    investment: float
    core_cost: float
    latent_cost: float
    offset: float
    scaled_objective: float
    status: str = "optimal"
    gap: Optional[float] = None
    verified: Optional[bool] = None
    method: str = "oracle"
    follower_mode: str = FollowerMode.GENERALIZED.value
    backend_objective: Optional[float] = None
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.investment + self.core_cost + self.latent_cost + self.offset

    @property
    def adopters(self) -> List[TripOutcome]:
        return [o for o in self.outcomes.values() if o.latent and o.adopts]

    def to_dict(self) -> Dict:
        return {
            "method": self.method,
            "follower_mode": self.follower_mode,
            "status": self.status,
            "objective": self.objective,
            "scaled_objective": self.scaled_objective,
            "backend_objective": self.backend_objective,
            "gap": self.gap,
            "verified": self.verified,
            "decomposition": {
                "investment": self.investment,
                "core_cost": self.core_cost,
                "latent_net_cost": self.latent_cost,
                "constant_offset": self.offset,
            },
            "open_arcs": [list(a) for a in self.open_arcs],
            "trips": [
                {
                    "trip_id": o.trip_id,
                    "class": "latent" if o.latent else "core",
                    "path": o.path.describe(),
                    "g": o.path.weighted_cost,
                    "t": o.path.duration,
                    "transfers": o.path.transfers,
                    "adopts": o.adopts,
                    "removed": o.removed,
                }
                for o in sorted(self.outcomes.values(), key=lambda o: o.trip_id)
            ],
            "timings": dict(self.timings),
        }


class Follower:
    """
    Ответ одной поездки на дизайн.

    Пути с g <= g_upper перечисляются один раз: путь-свидетель g_upper
    доступен при любом дизайне, поэтому оптимум всегда в этом списке.
    """

    def __init__(self, tables: CostTables, trip: Trip, choice_model: ChoiceModel,
                 mode: FollowerMode = FollowerMode.GENERALIZED):
        self.tables = tables
        self.trip = trip
        self.choice_model = choice_model
        self.mode = FollowerMode(mode)
        upper = compute_bounds(tables, trip).g_upper + tables.eps
        graph = build_trip_graph(tables, trip)
        self.paths: List[Path] = list(k_shortest_paths(graph, stop_predicate=lambda w: w <= upper))
        self._verdicts: Dict = {}

    def adopts(self, path: Path) -> bool:
        if path.key not in self._verdicts:
            self._verdicts[path.key] = self.choice_model.adopts(self.trip, path)
        return self._verdicts[path.key]

    def argmin(self, open_arcs: FrozenSet[ArcKey]) -> List[Path]:
        feasible = (p for p in self.paths if p.hub_legs <= open_arcs)
        best = next(feasible, None)
        if best is None:
            raise InternalError(f"Поездка {self.trip.id}: нет доступного пути при данном дизайне")
        cutoff = best.weighted_cost + self.tables.eps
        tied = [best] + [p for p in feasible if p.weighted_cost <= cutoff]
        if self.mode == FollowerMode.LEX:
            t_min = min(p.duration for p in tied)
            tied = [p for p in tied if p.duration <= t_min + config.EPS]
        return tied

    def respond(self, open_arcs: FrozenSet[ArcKey]) -> TripOutcome:
        tied = self.argmin(open_arcs)
        trip = self.trip
        if not trip.is_latent:
            path = tied[0]
            return TripOutcome(trip.id, False, trip.riders, path, None, trip.riders * path.weighted_cost)
        return pick_leader_optimal(self.tables, trip, tied, self.adopts)


def pick_leader_optimal(tables: CostTables, trip: Trip, tied: Sequence[Path], adopts) -> TripOutcome:
    """
    Выбор среди равноценных для пассажира путей в пользу оператора:
    путь AP, если есть; иначе отвергаемый путь; иначе путь ANP.
    """
    verdicts = [(p, adopts(p)) for p in tied]
    for path, adopt in verdicts:
        if adopt and tables.classify(True, path) == PathClass.AP:
            return _latent_outcome(tables, trip, path, True)
    for path, adopt in verdicts:
        if not adopt:
            return _latent_outcome(tables, trip, path, False)
    return _latent_outcome(tables, trip, verdicts[0][0], True)


def _latent_outcome(tables: CostTables, trip: Trip, path: Path, adopts: bool) -> TripOutcome:
    term = trip.riders * (path.weighted_cost - tables.phi_bar) if adopts else 0.0
    return TripOutcome(trip.id, True, trip.riders, path, adopts, term)


def _solution(tables: CostTables, outcomes: Dict[str, TripOutcome], open_arcs: Iterable[ArcKey],
              removals: Optional[Mapping[str, Removal]] = None) -> DesignSolution:
    removals = removals or {}
    core = latent = offset = 0.0
    for outcome in outcomes.values():
        if outcome.trip_id in removals:
            outcome.removed = True
            offset += outcome.term
        elif outcome.latent:
            latent += outcome.term
        else:
            core += outcome.term
    arcs = sorted(open_arcs)
    investment = tables.investment(arcs)
    total = investment + core + latent + offset
    return DesignSolution(arcs, outcomes, investment, core, latent, offset, scaled_objective=total)


def evaluate_design(tables: CostTables, trips: Sequence[Trip], choice_model: ChoiceModel,
                    open_arcs: Iterable[ArcKey], follower_mode: FollowerMode = FollowerMode.GENERALIZED,
                    removals: Optional[Mapping[str, Removal]] = None,
                    followers: Optional[Mapping[str, Follower]] = None) -> DesignSolution:
    """
    Пересчитывает ответ всех поездок на дизайн и целевую функцию оператора.

    Args:
        open_arcs: открытые дуги (фиксированные добавляются автоматически)
        removals: журнал предобработки; вклад удалённых поездок идёт в offset
        followers: заранее построенные Follower (для многократной оценки)
    """
    arcs = frozenset(open_arcs) | tables.instance.fixed_arcs
    outcomes = {}
    for trip in trips:
        follower = followers[trip.id] if followers is not None else Follower(tables, trip, choice_model, follower_mode)
        outcomes[trip.id] = follower.respond(arcs)
    solution = _solution(tables, outcomes, arcs, removals)
    solution.follower_mode = FollowerMode(follower_mode).value
    if removals:
        for trip_id, removal in removals.items():
            outcome = outcomes.get(trip_id)
            if outcome is not None and outcome.adopts is not None and outcome.adopts != removal.adopts:
                logger.warning(f"Поездка {trip_id}: вердикт предобработки не совпал с ответом пассажира")
    return solution


def _balanced_designs(tables: CostTables) -> Iterator[FrozenSet[ArcKey]]:
    """Все дизайны Z_fixed ⊆ z ⊆ Z с балансом входящих и исходящих дуг в каждом хабе."""
    instance = tables.instance
    undecided = list(instance.undecided_arcs)
    balance = {h: 0 for h in instance.hubs}
    rem_out = {h: 0 for h in instance.hubs}
    rem_in = {h: 0 for h in instance.hubs}
    for h, l in undecided:
        rem_out[h] += 1
        rem_in[l] += 1
    chosen: List[ArcKey] = []
    fixed = instance.fixed_arcs

    def feasible(h: str) -> bool:
        # баланс h ещё можно вернуть к нулю оставшимися дугами
        return -rem_out[h] <= balance[h] <= rem_in[h]

    def walk(i: int) -> Iterator[FrozenSet[ArcKey]]:
        if i == len(undecided):
            if all(b == 0 for b in balance.values()):
                yield fixed | frozenset(chosen)
            return
        h, l = undecided[i]
        rem_out[h] -= 1
        rem_in[l] -= 1
        for take in (False, True):
            if take:
                balance[h] += 1
                balance[l] -= 1
                chosen.append((h, l))
            if feasible(h) and feasible(l):
                yield from walk(i + 1)
            if take:
                balance[h] -= 1
                balance[l] += 1
                chosen.pop()
        rem_out[h] += 1
        rem_in[l] += 1

    yield from walk(0)


def _cross_check(tables: CostTables, trip: Trip, follower: Follower, arcs: FrozenSet[ArcKey]) -> None:
    graph = build_trip_graph(tables, trip, hub_arcs=arcs)
    paths = enumerate_simple_paths(graph)
    g_min = paths[0].weighted_cost
    expected = {p.key for p in paths if p.weighted_cost <= g_min + tables.eps}
    got_all = [p for p in follower.paths if p.hub_legs <= arcs]
    got = {p.key for p in got_all if p.weighted_cost <= got_all[0].weighted_cost + tables.eps}
    if expected != got:
        raise InternalError(f"Поездка {trip.id}: argmin по перебору путей не совпал с потоком Йена")


def bilevel_oracle(tables: CostTables, trips: Sequence[Trip], choice_model: ChoiceModel,
                   follower_mode: FollowerMode = FollowerMode.GENERALIZED,
                   max_undecided: int = config.ORACLE_MAX_UNDECIDED_ARCS,
                   cross_check: bool = False) -> DesignSolution:
    """
    Точный перебор всех сбалансированных дизайнов.

    В режиме lex пассажир минимизирует <g, t>, а дизайны сравниваются
    по M_lex * цель + длительности пассажиров, как в модели на
    преобразованных таблицах; objective возвращается в исходных единицах.

    Raises:
        ResourceLimitError: неопределённых дуг больше max_undecided
    """
    follower_mode = FollowerMode(follower_mode)
    undecided = tables.instance.undecided_arcs
    if len(undecided) > max_undecided:
        raise ResourceLimitError(
            f"Оракул: {len(undecided)} неопределённых дуг при пределе {max_undecided}"
        )
    began = time.perf_counter()
    base = tables.original
    scale = None
    if follower_mode == FollowerMode.LEX:
        scale = tables.scale if tables.is_lex else lex_scale(base.instance)
        tables = base
    followers = {t.id: Follower(tables, t, choice_model, follower_mode) for t in trips}

    best: Optional[DesignSolution] = None
    count = 0
    for arcs in tqdm(_balanced_designs(tables), desc="Оракул", disable=not config.SHOW_PROGRESS):
        count += 1
        if cross_check:
            for trip in trips:
                _cross_check(tables, trip, followers[trip.id], arcs)
        solution = evaluate_design(tables, trips, choice_model, arcs, follower_mode, followers=followers)
        if scale is not None:
            solution.scaled_objective = scale * solution.objective + sum(
                o.riders * o.path.duration for o in solution.outcomes.values() if not o.latent or o.adopts
            )
        if best is None or solution.scaled_objective < best.scaled_objective - tables.eps * (scale or 1.0):
            best = solution
    best.method = "oracle"
    best.gap = 0.0
    best.verified = True
    best.timings["oracle"] = time.perf_counter() - began
    logger.info(f"Оракул: перебрано {count} дизайнов, цель {best.objective:.6f}")
    return best
