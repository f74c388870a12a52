"""
Перечисление путей латентных поездок: PE (модель выбора как чёрный ящик)
и PE-DCM (модель по длительности и числу пересадок).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path as FsPath
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd
from tqdm import tqdm

from . import config
from .choice import ChoiceModel, DurationAndTransfers, DurationOnly
from .costs import CostTables, PathClass
from .errors import InvalidArgumentError, ResourceLimitError
from .model import Path, Trip
from .preprocess import PreprocessContext, Removal, finalize_removals
from .trip_graph import (
    Channel,
    HubPathCache,
    TripGraph,
    build_trip_graph,
    enumerate_simple_paths,
    k_shortest_paths,
    path_order_key,
)

logger = logging.getLogger(__name__)


class DcmMode(str, Enum):
    KSHORTEST_TIME = "kshortest_time"
    BOUNDED_LEGS = "bounded_legs"


@dataclass
class PathSets:
    """
    Наборы путей одной латентной поездки.

    pi есть только у PE; в режиме PE-DCM хранятся лишь A_red и RP_red.
    """
    trip_id: str
    adopt: List[Path] = field(default_factory=list)
    reject_profitable: List[Path] = field(default_factory=list)
    pi: Optional[List[Path]] = None
    tags: Dict[Tuple, PathClass] = field(default_factory=dict)
    removed: Optional[Removal] = None

    @property
    def candidates(self) -> List[Path]:
        """A и RP в детерминированном порядке."""
        return _ordered(self.adopt + self.reject_profitable)

    def tag(self, path: Path) -> Optional[PathClass]:
        return self.tags.get(path.key)


def _ordered(paths: Sequence[Path]) -> List[Path]:
    return sorted(paths, key=lambda p: path_order_key(p.weighted_cost, p.legs))


def _trip_graph(tables: CostTables, trip: Trip, ctx: Optional[PreprocessContext]) -> TripGraph:
    if ctx is None:
        return build_trip_graph(tables, trip)
    return build_trip_graph(tables, trip, hub_arcs=ctx.hub_arcs_for(trip.id),
                            shuttle_arcs=ctx.shuttle_arcs_for(trip.id))


def _upper(tables: CostTables, trip: Trip, ctx: Optional[PreprocessContext]) -> float:
    if ctx is None or not ctx.filter_by_upper:
        return float("inf")
    return ctx.g_upper(trip.id) + tables.eps


def _latent_trips(trips: Sequence[Trip]) -> List[Trip]:
    return sorted((t for t in trips if t.is_latent), key=lambda t: t.id)


def enumerate_pe(tables: CostTables, choice_model: ChoiceModel, trips: Sequence[Trip],
                 ctx: Optional[PreprocessContext] = None,
                 hub_paths: Optional[HubPathCache] = None,
                 path_cap: int = config.PATH_CAP_PER_TRIP) -> Dict[str, PathSets]:
    """
    Алгоритм PE: перечисляет все пути и классифицирует их моделью выбора.

    С контекстом предобработки перечисление идёт на сокращённом графе,
    пути с g > g_upper отбрасываются, удалённые поездки получают пустые наборы.

    Raises:
        ResourceLimitError: у поездки больше path_cap путей
    """
    result: Dict[str, PathSets] = {}
    for trip in tqdm(_latent_trips(trips), desc="PE", disable=not config.SHOW_PROGRESS):
        if ctx is not None and ctx.is_removed(trip.id):
            result[trip.id] = PathSets(trip.id, removed=ctx.removals[trip.id])
            continue
        graph = _trip_graph(tables, trip, ctx)
        upper = _upper(tables, trip, ctx)
        paths = [p for p in enumerate_simple_paths(graph, hub_paths=hub_paths, limit=path_cap)
                 if p.weighted_cost <= upper]
        sets = PathSets(trip.id, pi=paths)
        for path in paths:
            adopts = choice_model.adopts(trip, path)
            tag = tables.classify(adopts, path)
            sets.tags[path.key] = tag
            if adopts:
                sets.adopt.append(path)
            elif tag == PathClass.RP:
                sets.reject_profitable.append(path)
        result[trip.id] = sets
    if ctx is not None:
        finalize_removals(ctx, result)
    logger.info(f"PE: {len(result)} латентных поездок, "
                f"{sum(len(s.pi or []) for s in result.values())} путей")
    return result


def enumerate_pe_dcm(tables: CostTables, trips: Sequence[Trip], mode: DcmMode = DcmMode.KSHORTEST_TIME,
                     ctx: Optional[PreprocessContext] = None,
                     choice_model: Optional[ChoiceModel] = None,
                     hub_paths: Optional[HubPathCache] = None,
                     path_cap: int = config.PATH_CAP_PER_TRIP) -> Tuple[Dict[str, PathSets], List[str]]:
    """
    Алгоритм PE-DCM.

    RP строится потоком k кратчайших путей по взвешенной стоимости, пока g < phi_bar;
    A: потоком по длительности, пока t <= alpha * t_cur (kshortest_time),
    либо перечислением путей не длиннее l_ub + 1 ног (bounded_legs).

    Returns:
        Наборы путей по поездкам и список оставшихся латентных поездок
    """
    mode = DcmMode(mode)
    if choice_model is None:
        choice_model = DurationAndTransfers()
    if not isinstance(choice_model, DurationOnly):
        raise InvalidArgumentError("PE-DCM работает только с моделями выбора по длительности и пересадкам")
    result: Dict[str, PathSets] = {}
    for trip in tqdm(_latent_trips(trips), desc="PE-DCM", disable=not config.SHOW_PROGRESS):
        if ctx is not None and ctx.is_removed(trip.id):
            result[trip.id] = PathSets(trip.id, removed=ctx.removals[trip.id])
            continue
        graph = _trip_graph(tables, trip, ctx)
        upper = _upper(tables, trip, ctx)
        sets = PathSets(trip.id)

        phi_cut = tables.phi_bar - tables.eps
        for path in k_shortest_paths(graph, Channel.WEIGHTED_COST,
                                     stop_predicate=lambda w: w < phi_cut and w <= upper):
            if not choice_model.adopts(trip, path):
                sets.reject_profitable.append(path)
                _check_cap(sets.reject_profitable, path_cap, trip)

        if mode == DcmMode.KSHORTEST_TIME:
            t_cut = trip.alpha * trip.t_cur + choice_model.tolerance
            stream = k_shortest_paths(graph, Channel.DURATION, stop_predicate=lambda t: t <= t_cut)
        else:
            max_legs = None if trip.transfer_tolerance is None else trip.transfer_tolerance + 1
            stream = enumerate_simple_paths(graph, max_legs=max_legs, hub_paths=hub_paths, limit=path_cap)
        for path in stream:
            if path.weighted_cost <= upper and choice_model.adopts(trip, path):
                sets.adopt.append(path)
                _check_cap(sets.adopt, path_cap, trip)

        sets.adopt = _ordered(sets.adopt)
        sets.reject_profitable = _ordered(sets.reject_profitable)
        for path in sets.adopt:
            sets.tags[path.key] = tables.classify(True, path)
        for path in sets.reject_profitable:
            sets.tags[path.key] = PathClass.RP
        result[trip.id] = sets
    if ctx is not None:
        finalize_removals(ctx, result)
    latent_red = [trip_id for trip_id, s in result.items() if s.removed is None]
    logger.info(f"PE-DCM ({mode.value}): осталось {len(latent_red)} из {len(result)} латентных поездок")
    return result, latent_red


def _check_cap(paths: List[Path], cap: int, trip: Trip) -> None:
    if len(paths) > cap:
        raise ResourceLimitError(f"Поездка {trip.id}: больше {cap} путей в наборе")


def path_sets_to_frame(path_sets: Mapping[str, PathSets]) -> pd.DataFrame:
    """Одна строка на путь: поездка, ноги, g, t, l, класс и принадлежность наборам."""
    rows = []
    for trip_id in sorted(path_sets):
        sets = path_sets[trip_id]
        adopt = {p.key for p in sets.adopt}
        rp = {p.key for p in sets.reject_profitable}
        paths = sets.pi if sets.pi is not None else sets.candidates
        for path in paths:
            rows.append({
                "trip_id": trip_id,
                "path": path.describe(),
                "legs": ";".join(f"{t}>{h}:{k}" for t, h, k in path.key),
                "g": path.weighted_cost,
                "t": path.duration,
                "l": path.transfers,
                "tag": sets.tags[path.key].value if path.key in sets.tags else None,
                "in_adopt": path.key in adopt,
                "in_reject_profitable": path.key in rp,
            })
    columns = ["trip_id", "path", "legs", "g", "t", "l", "tag", "in_adopt", "in_reject_profitable"]
    return pd.DataFrame(rows, columns=columns)


def dump_path_sets(path_sets: Mapping[str, PathSets], csv_path) -> FsPath:
    csv_path = FsPath(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    path_sets_to_frame(path_sets).to_csv(csv_path, index=False)
    return csv_path


def check_lex_resolution(tables: CostTables, path_sets: Mapping[str, PathSets]) -> None:
    """
    Проверяет, что преобразование различает все значения g путей каждой поездки
    и порог phi_bar: разные значения должны отстоять дальше T_max / M_lex.

    Raises:
        InvalidArgumentError: найдено столкновение значений
    """
    if not tables.is_lex:
        return
    base = tables.original
    resolution = tables.duration_bound / tables.scale
    offenders = []
    for trip_id in sorted(path_sets):
        sets = path_sets[trip_id]
        paths = sets.pi if sets.pi is not None else sets.candidates
        values = sorted({base.reprice(p).weighted_cost for p in paths} | {base.phi_bar})
        for lo, hi in zip(values, values[1:]):
            if config.EPS < hi - lo <= resolution:
                offenders.append(f"{trip_id}: {lo:.9g} и {hi:.9g}")
                break
    if offenders:
        raise InvalidArgumentError(
            f"M_lex={tables.scale:g} не различает стоимости путей (разрешение {resolution:.3g}): "
            + ", ".join(offenders)
        )
