"""
Предобработка: границы стоимости, сокращение шаттлов, назначение путей,
удаление пассажиров и удаление переменных x по дугам между хабами.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set

import pandas as pd
from tqdm import tqdm

from . import config
from .choice import ChoiceModel
from .costs import CostTables, PathClass
from .errors import InvalidArgumentError
from .model import ArcKey, Path, Trip
from .trip_graph import (
    build_trip_graph,
    k_shortest_paths,
    shortest_costs_from,
    shortest_costs_to,
    shortest_path,
    shuttle_arc_keys,
)

logger = logging.getLogger(__name__)


class RemovalKind(str, Enum):
    ADOPT = "guaranteed_adopt"
    REJECT = "guaranteed_reject"


@dataclass(frozen=True)
class Removal:
    """Запись журнала удалённых поездок; contribution: постоянный член целевой функции."""
    trip_id: str
    kind: RemovalKind
    reason: str
    path: Optional[Path] = None
    contribution: float = 0.0

    @property
    def adopts(self) -> bool:
        return self.kind == RemovalKind.ADOPT


@dataclass
class TripBounds:
    """g_upper достигается путём witness только по фиксированным дугам; g_lower: по всем дугам."""
    trip_id: str
    g_upper: float
    witness: Path
    g_lower: float
    min_path: Path
    fixed_argmin: List[Path] = field(default_factory=list)
    full_argmin: List[Path] = field(default_factory=list)

    def is_tight(self, eps: float) -> bool:
        return self.g_upper - self.g_lower <= eps


@dataclass(frozen=True)
class PreprocessSteps:
    shuttle_elimination: bool = True
    path_assignment: bool = True
    rider_removal: bool = True
    hub_leg_removal: bool = True

    NAMES = ("shuttle_elimination", "path_assignment", "rider_removal", "hub_leg_removal")

    @classmethod
    def none(cls) -> "PreprocessSteps":
        return cls(False, False, False, False)

    @classmethod
    def without(cls, names: Iterable[str]) -> "PreprocessSteps":
        """Все шаги, кроме перечисленных (имена можно писать через дефис)."""
        disabled = {n.strip().replace("-", "_") for n in names if n.strip()}
        unknown = disabled - set(cls.NAMES)
        if unknown:
            raise InvalidArgumentError(
                f"Неизвестные шаги предобработки: {sorted(unknown)}; допустимы: {list(cls.NAMES)}"
            )
        return cls(**{n: n not in disabled for n in cls.NAMES})

    def enabled(self) -> List[str]:
        return [n for n in self.NAMES if getattr(self, n)]


def compute_bounds(tables: CostTables, trip: Trip, with_argmin: bool = False) -> TripBounds:
    """
    Вычисляет g_upper (только фиксированные дуги и шаттлы) и g_lower (все дуги).

    При with_argmin и совпадении границ дополнительно перечисляет
    все пути-минимизаторы на обоих графах.
    """
    instance = tables.instance
    fixed_graph = build_trip_graph(tables, trip, hub_arcs=instance.fixed_arcs)
    full_graph = build_trip_graph(tables, trip)
    witness = shortest_path(fixed_graph)
    min_path = shortest_path(full_graph)
    bounds = TripBounds(trip.id, witness.weighted_cost, witness, min_path.weighted_cost, min_path)
    if with_argmin and bounds.is_tight(tables.eps):
        cutoff = bounds.g_upper + tables.eps
        bounds.fixed_argmin = list(k_shortest_paths(fixed_graph, stop_predicate=lambda w: w <= cutoff))
        bounds.full_argmin = list(k_shortest_paths(full_graph, stop_predicate=lambda w: w <= cutoff))
    return bounds


def reduce_shuttle_arcs(tables: CostTables, trip: Trip, g_upper: float) -> List[ArcKey]:
    """L_red: шаттлы с gamma <= g_upper (удаляются только строго более дорогие)."""
    return [
        (i, j) for i, j in shuttle_arc_keys(tables.instance, trip)
        if tables.shuttle_cost(i, j) <= g_upper + tables.eps
    ]


def assign_and_remove(tables: CostTables, trip: Trip, bounds: TripBounds,
                      choice_model: ChoiceModel) -> Optional[Removal]:
    """
    Вердикт для латентной поездки с g_upper = g_lower.

    Принятие гарантировано, если среди минимизаторов на фиксированном графе
    есть путь AP или минимизатор на полном графе единственен и принимается.
    Отказ гарантирован, если все минимизаторы на полном графе отвергаются.
    """
    if not trip.is_latent or not bounds.is_tight(tables.eps):
        return None
    verdicts = [(p, choice_model.adopts(trip, p)) for p in bounds.full_argmin]
    fixed_ap = [
        p for p in bounds.fixed_argmin
        if tables.classify(choice_model.adopts(trip, p), p) == PathClass.AP
    ]
    if fixed_ap:
        path = fixed_ap[0]
        return Removal(trip.id, RemovalKind.ADOPT, "оптимальный путь AP доступен при любом дизайне",
                       path, trip.riders * (path.weighted_cost - tables.phi_bar))
    if len(verdicts) == 1 and verdicts[0][1]:
        path = verdicts[0][0]
        return Removal(trip.id, RemovalKind.ADOPT, "единственный оптимальный путь принимается",
                       path, trip.riders * (path.weighted_cost - tables.phi_bar))
    if verdicts and not any(adopts for _, adopts in verdicts):
        return Removal(trip.id, RemovalKind.REJECT, "все оптимальные пути отвергаются")
    return None


def remove_hub_legs(tables: CostTables, trips: Sequence[Trip], bounds: Mapping[str, TripBounds],
                    shuttle_arcs: Optional[Mapping[str, Sequence[ArcKey]]] = None) -> Dict[ArcKey, Set[str]]:
    """
    Для каждой дуги (h, l): множество поездок, у которых x^r_hl удаляется.

    Переменная удаляется, если g_lower(or, h) + tau_hl или tau_hl + g_lower(l, de)
    превышает g_upper больше чем на eps. Недостижимый хаб даёт +inf.
    """
    excluded: Dict[ArcKey, Set[str]] = {arc: set() for arc in tables.instance.candidate_arcs}
    for trip in tqdm(trips, desc="Удаление дуг", disable=not config.SHOW_PROGRESS):
        allowed = shuttle_arcs.get(trip.id) if shuttle_arcs is not None else None
        graph = build_trip_graph(tables, trip, shuttle_arcs=allowed)
        from_origin = shortest_costs_from(graph, trip.origin)
        to_destination = shortest_costs_to(graph, trip.destination)
        limit = bounds[trip.id].g_upper + tables.eps
        for (h, l), tau in tables.tau.items():
            prefix = from_origin.get(h, math.inf)
            suffix = to_destination.get(l, math.inf)
            if prefix + tau > limit or tau + suffix > limit:
                excluded[(h, l)].add(trip.id)
    return excluded


def big_m_for_trip(bounds: TripBounds, paths: Iterable[Path] = ()) -> float:
    """M = g_upper; если в наборе остались более дорогие пути: их максимум."""
    return max([bounds.g_upper] + [p.weighted_cost for p in paths])


@dataclass
class PreprocessContext:
    tables: CostTables
    trips: List[Trip]
    steps: PreprocessSteps
    bounds: Dict[str, TripBounds]
    shuttle_arcs: Dict[str, List[ArcKey]]
    removals: Dict[str, Removal] = field(default_factory=dict)
    excluded: Dict[ArcKey, Set[str]] = field(default_factory=dict)

    @property
    def filter_by_upper(self) -> bool:
        """Отбрасывать ли пути с g > g_upper."""
        return self.steps.shuttle_elimination

    def is_removed(self, trip_id: str) -> bool:
        return trip_id in self.removals

    def excluded_arcs_for(self, trip_id: str) -> Set[ArcKey]:
        return {arc for arc, trip_ids in self.excluded.items() if trip_id in trip_ids}

    def hub_arcs_for(self, trip_id: str) -> List[ArcKey]:
        skip = self.excluded_arcs_for(trip_id)
        return [arc for arc in self.tables.instance.candidate_arcs if arc not in skip]

    def shuttle_arcs_for(self, trip_id: str) -> List[ArcKey]:
        return self.shuttle_arcs[trip_id]

    def g_upper(self, trip_id: str) -> float:
        return self.bounds[trip_id].g_upper

    def big_m(self, trip_id: str, paths: Iterable[Path] = ()) -> float:
        return big_m_for_trip(self.bounds[trip_id], paths)

    @property
    def latent_red(self) -> List[str]:
        return [t.id for t in self.trips if t.is_latent and t.id not in self.removals]

    @property
    def offset(self) -> float:
        return sum(r.contribution for r in self.removals.values())


def run_preprocessing(tables: CostTables, trips: Sequence[Trip], choice_model: ChoiceModel,
                      steps: PreprocessSteps = PreprocessSteps()) -> PreprocessContext:
    """
    Собирает контекст предобработки.

    Границы считаются всегда (они нужны для big-M); остальные шаги
    включаются флагами steps.
    """
    trips = sorted(trips, key=lambda t: t.id)
    bounds: Dict[str, TripBounds] = {}
    shuttle_arcs: Dict[str, List[ArcKey]] = {}
    removals: Dict[str, Removal] = {}
    need_argmin = steps.path_assignment or steps.rider_removal
    for trip in tqdm(trips, desc="Границы стоимости", disable=not config.SHOW_PROGRESS):
        b = compute_bounds(tables, trip, with_argmin=trip.is_latent and need_argmin)
        bounds[trip.id] = b
        if steps.shuttle_elimination:
            shuttle_arcs[trip.id] = reduce_shuttle_arcs(tables, trip, b.g_upper)
        else:
            shuttle_arcs[trip.id] = shuttle_arc_keys(tables.instance, trip)
        removal = assign_and_remove(tables, trip, b, choice_model)
        if removal is None:
            continue
        if removal.adopts and steps.path_assignment or not removal.adopts and steps.rider_removal:
            removals[trip.id] = removal
    ctx = PreprocessContext(tables, list(trips), steps, bounds, shuttle_arcs, removals)
    if steps.hub_leg_removal:
        kept = [t for t in trips if not ctx.is_removed(t.id)]
        ctx.excluded = remove_hub_legs(tables, kept, bounds, shuttle_arcs)
    logger.info(
        f"Предобработка: шаги {steps.enabled()}, удалено поездок {len(removals)}, "
        f"удалено x-переменных {sum(len(v) for v in ctx.excluded.values())}"
    )
    return ctx


def finalize_removals(ctx: PreprocessContext, path_sets: Mapping) -> List[str]:
    """
    Удаляет латентные поездки с пустым A_red (после перечисления путей).

    Returns:
        Идентификаторы удалённых на этом шаге поездок
    """
    if not ctx.steps.rider_removal:
        return []
    removed = []
    for trip_id, sets in path_sets.items():
        if sets.removed is None and not sets.adopt:
            removal = Removal(trip_id, RemovalKind.REJECT, "нет принимаемых путей")
            ctx.removals[trip_id] = removal
            sets.removed = removal
            removed.append(trip_id)
    return removed


@dataclass
class PreprocessReport:
    trips_total: int
    latent_total: int
    removed_adopt: int
    removed_reject: int
    shuttle_arcs_total: int
    shuttle_arcs_removed: int
    x_vars_total: int
    x_vars_removed: int
    paths_pi: Optional[int] = None
    paths_adopt: Optional[int] = None
    paths_reject_profitable: Optional[int] = None

    @classmethod
    def from_context(cls, ctx: PreprocessContext, path_sets: Optional[Mapping] = None) -> "PreprocessReport":
        instance = ctx.tables.instance
        full_shuttles = sum(len(shuttle_arc_keys(instance, t)) for t in ctx.trips)
        kept_shuttles = sum(len(v) for v in ctx.shuttle_arcs.values())
        routed = [t.id for t in ctx.trips if not ctx.is_removed(t.id)]
        x_total = len(instance.candidate_arcs) * len(routed)
        routed_set = set(routed)
        x_removed = sum(len(ids & routed_set) for ids in ctx.excluded.values())
        report = cls(
            trips_total=len(ctx.trips),
            latent_total=sum(1 for t in ctx.trips if t.is_latent),
            removed_adopt=sum(1 for r in ctx.removals.values() if r.adopts),
            removed_reject=sum(1 for r in ctx.removals.values() if not r.adopts),
            shuttle_arcs_total=full_shuttles,
            shuttle_arcs_removed=full_shuttles - kept_shuttles,
            x_vars_total=x_total,
            x_vars_removed=x_removed,
        )
        if path_sets is not None:
            live = [s for s in path_sets.values() if s.removed is None]
            if all(s.pi is not None for s in live):
                report.paths_pi = sum(len(s.pi) for s in live)
            report.paths_adopt = sum(len(s.adopt) for s in live)
            report.paths_reject_profitable = sum(len(s.reject_profitable) for s in live)
        return report

    def to_dict(self) -> Dict:
        return dict(self.__dict__)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([self.to_dict()])
