"""
Граф поездки G^r и примитивы поиска путей.

Граф: мультиграф: шаттл и дуга между хабами с одинаковыми концами
различаются видом ноги (tail, head, kind). Порядок путей везде один:
(вес, округлённый до 9 знаков; число ног; последовательность ключей ног).
"""

import heapq
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import networkx as nx

from .costs import CostTables
from .errors import DataError, ResourceLimitError
from .model import ArcKey, Leg, LegKind, NetworkInstance, Path, Trip

logger = logging.getLogger(__name__)

LegKey = Tuple[str, str, str]


class Channel(str, Enum):
    WEIGHTED_COST = "weighted_cost"
    DURATION = "duration"


@dataclass(frozen=True)
class Arc:
    tail: str
    head: str
    kind: LegKind
    cost: float
    duration: float

    @property
    def leg(self) -> Leg:
        return Leg(self.tail, self.head, self.kind)

    @property
    def key(self) -> LegKey:
        return (self.tail, self.head, self.kind.value)

    def weight(self, channel: Channel) -> float:
        return self.cost if channel == Channel.WEIGHTED_COST else self.duration


def shuttle_arc_keys(instance: NetworkInstance, trip: Trip) -> List[ArcKey]:
    """L^r: прямой шаттл, шаттлы из начала к хабам и от хабов к концу."""
    o, d = trip.origin, trip.destination
    keys = [(o, d)]
    for h in instance.hubs:
        if h not in (o, d):
            keys.append((o, h))
    for h in instance.hubs:
        if h not in (o, d):
            keys.append((h, d))
    return keys


class TripGraph:
    """G^r = (V^r, E^r) с двумя каналами весов на каждой дуге."""

    def __init__(self, tables: CostTables, trip: Trip, arcs: Sequence[Arc]):
        self.tables = tables
        self.trip = trip
        self.trip_id = trip.id
        self.origin = trip.origin
        self.destination = trip.destination
        self.vertices: FrozenSet[str] = frozenset((trip.origin, trip.destination) + tuple(tables.instance.hubs))
        self.arcs: Tuple[Arc, ...] = tuple(sorted(arcs, key=lambda a: a.key))
        self.out_arcs: Dict[str, List[Arc]] = {v: [] for v in self.vertices}
        for arc in self.arcs:
            self.out_arcs[arc.tail].append(arc)

    @property
    def hub_arc_keys(self) -> Set[ArcKey]:
        return {(a.tail, a.head) for a in self.arcs if a.kind == LegKind.HUB}

    @property
    def shuttle_arc_keys(self) -> Set[ArcKey]:
        return {(a.tail, a.head) for a in self.arcs if a.kind == LegKind.SHUTTLE}

    def make_path(self, arcs: Sequence[Arc]) -> Path:
        return self.tables.make_path(self.trip_id, [a.leg for a in arcs])

    def to_networkx(self, channel: Channel = Channel.WEIGHTED_COST) -> nx.MultiDiGraph:
        graph = nx.MultiDiGraph()
        graph.add_nodes_from(sorted(self.vertices))
        for arc in self.arcs:
            graph.add_edge(arc.tail, arc.head, key=arc.kind.value, weight=arc.weight(channel))
        return graph

    def __repr__(self) -> str:
        return f"TripGraph({self.trip_id}: |V|={len(self.vertices)}, |E|={len(self.arcs)})"


def build_trip_graph(tables: CostTables, trip: Trip,
                     hub_arcs: Optional[Iterable[ArcKey]] = None,
                     shuttle_arcs: Optional[Iterable[ArcKey]] = None) -> TripGraph:
    """
    Строит граф поездки.

    Args:
        tables: таблицы стоимостей экземпляра
        trip: поездка
        hub_arcs: подмножество дуг-кандидатов (по умолчанию все Z)
        shuttle_arcs: подмножество L^r (по умолчанию всё L^r)

    Returns:
        TripGraph с весами tau/gamma и длительностями
    """
    instance = tables.instance
    for stop in (trip.origin, trip.destination):
        if not instance.has_stop(stop):
            raise DataError(f"Поездка {trip.id} ссылается на неизвестную остановку {stop}")
    allowed_shuttles = shuttle_arc_keys(instance, trip)
    if shuttle_arcs is not None:
        chosen = set(shuttle_arcs)
        allowed_shuttles = [k for k in allowed_shuttles if k in chosen]
    hub_keys = instance.candidate_arcs if hub_arcs is None else sorted(set(hub_arcs))
    arcs = []
    for h, l in hub_keys:
        arcs.append(Arc(h, l, LegKind.HUB, tables.tau[(h, l)], tables.hub_duration[(h, l)]))
    for i, j in allowed_shuttles:
        arcs.append(Arc(i, j, LegKind.SHUTTLE, tables.shuttle_cost(i, j), tables.shuttle_duration(i, j)))
    return TripGraph(tables, trip, arcs)


def path_order_key(weight: float, legs: Sequence) -> Tuple:
    keys = tuple(leg.key for leg in legs)
    return (round(weight, 9), len(keys), keys)


def _is_valid(arcs: Sequence[Arc]) -> bool:
    return not (len(arcs) == 2 and all(a.kind == LegKind.SHUTTLE for a in arcs))


def _chain_weight(arcs: Sequence[Arc], channel: Channel) -> float:
    total = 0.0
    for arc in arcs:
        total += arc.weight(channel)
    return total


def _dijkstra(graph: TripGraph, source: str, target: str, channel: Channel,
              banned_nodes: Set[str] = frozenset(), banned_arcs: Set[LegKey] = frozenset(),
              start_weight: float = 0.0) -> Optional[Tuple[Arc, ...]]:
    """Кратчайший путь source -> target по составной метке (вес, число ног, ключи ног)."""
    counter = itertools.count()
    best: Dict[str, Tuple] = {source: (round(start_weight, 9), 0, ())}
    heap = [((round(start_weight, 9), 0, ()), next(counter), start_weight, source, ())]
    done: Set[str] = set()
    while heap:
        label, _, weight, node, arcs = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == target:
            return arcs
        for arc in graph.out_arcs.get(node, ()):
            if arc.head in banned_nodes or arc.head in done or arc.key in banned_arcs:
                continue
            new_weight = weight + arc.weight(channel)
            new_label = (round(new_weight, 9), label[1] + 1, label[2] + (arc.key,))
            if arc.head not in best or new_label < best[arc.head]:
                best[arc.head] = new_label
                heapq.heappush(heap, (new_label, next(counter), new_weight, arc.head, arcs + (arc,)))
    return None


def _yen(graph: TripGraph, channel: Channel) -> Iterator[Tuple[Arc, ...]]:
    """
    Алгоритм Йена для мультиграфа: выдаёт все простые пути origin -> destination
    (включая недопустимые двухшаттловые) в порядке path_order_key.
    """
    first = _dijkstra(graph, graph.origin, graph.destination, channel)
    if first is None:
        return
    emitted: List[Tuple[Arc, ...]] = []
    seen = {tuple(a.key for a in first)}
    counter = itertools.count()
    candidates = [(path_order_key(_chain_weight(first, channel), first), next(counter), first)]
    while candidates:
        _, _, path = heapq.heappop(candidates)
        emitted.append(path)
        yield path
        for i in range(len(path)):
            root = path[:i]
            spur_node = root[-1].head if root else graph.origin
            root_keys = tuple(a.key for a in root)
            banned_arcs = {
                p[i].key for p in emitted
                if len(p) > i and tuple(a.key for a in p[:i]) == root_keys
            }
            banned_nodes = {graph.origin} | {a.head for a in root}
            banned_nodes.discard(spur_node)
            spur = _dijkstra(graph, spur_node, graph.destination, channel, banned_nodes, banned_arcs)
            if spur is None:
                continue
            total = root + spur
            keys = tuple(a.key for a in total)
            if keys in seen:
                continue
            seen.add(keys)
            heapq.heappush(candidates, (path_order_key(_chain_weight(total, channel), total), next(counter), total))


def k_shortest_paths(graph: TripGraph, channel: Channel = Channel.WEIGHTED_COST,
                     stop_predicate: Optional[Callable[[float], bool]] = None) -> Iterator[Path]:
    """
    Ленивый поток допустимых простых путей в неубывающем порядке веса канала.

    stop_predicate получает вес пути на канале; поток обрывается на первом
    пути, для которого предикат вернул False.
    """
    for arcs in _yen(graph, channel):
        if stop_predicate is not None and not stop_predicate(_chain_weight(arcs, channel)):
            return
        if _is_valid(arcs):
            yield graph.make_path(arcs)


def shortest_path(graph: TripGraph, channel: Channel = Channel.WEIGHTED_COST) -> Optional[Path]:
    return next(k_shortest_paths(graph, channel), None)


class HubPathCache:
    """
    Простые пути между хабами по (H, Z), общие для всех поездок.

    Пути для пары (a, b) считаются networkx при первом запросе и запоминаются.
    """

    def __init__(self, instance: NetworkInstance, max_legs: Optional[int] = None):
        self.max_legs = max_legs
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(instance.hubs)
        self.graph.add_edges_from(instance.candidate_arcs)
        self._paths: Dict[Tuple[str, str], List[Tuple[ArcKey, ...]]] = {}

    def paths(self, a: str, b: str) -> List[Tuple[ArcKey, ...]]:
        key = (a, b)
        if key not in self._paths:
            found = []
            if a != b and a in self.graph and b in self.graph:
                for nodes in nx.all_simple_paths(self.graph, a, b, cutoff=self.max_legs):
                    found.append(tuple(zip(nodes, nodes[1:])))
            self._paths[key] = sorted(found)
        return self._paths[key]


def _dfs_paths(graph: TripGraph, max_legs: Optional[int]) -> Iterator[Tuple[Arc, ...]]:
    stack = [(graph.origin, (), {graph.origin})]
    while stack:
        node, arcs, visited = stack.pop()
        if node == graph.destination:
            yield arcs
            continue
        if max_legs is not None and len(arcs) >= max_legs:
            continue
        for arc in reversed(graph.out_arcs.get(node, ())):
            if arc.head not in visited:
                stack.append((arc.head, arcs + (arc,), visited | {arc.head}))


def _spliced_paths(graph: TripGraph, max_legs: Optional[int], cache: HubPathCache) -> Iterator[Tuple[Arc, ...]]:
    by_key = {a.key: a for a in graph.arcs}
    o, d = graph.origin, graph.destination
    direct = by_key.get((o, d, LegKind.SHUTTLE.value))
    if direct is not None:
        yield (direct,)
    hubs = sorted(graph.tables.instance.hubs)
    for a in hubs:
        head = () if a == o else (by_key.get((o, a, LegKind.SHUTTLE.value)),)
        if None in head:
            continue
        for b in hubs:
            if a == b:
                continue
            tail = () if b == d else (by_key.get((b, d, LegKind.SHUTTLE.value)),)
            if None in tail:
                continue
            for hub_path in cache.paths(a, b):
                legs = len(head) + len(hub_path) + len(tail)
                if max_legs is not None and legs > max_legs:
                    continue
                middle = tuple(by_key.get((h, l, LegKind.HUB.value)) for h, l in hub_path)
                if None in middle:
                    continue
                arcs = head + middle + tail
                nodes = [o] + [arc.head for arc in arcs]
                if len(set(nodes)) == len(nodes):
                    yield arcs


def enumerate_simple_paths(graph: TripGraph, max_legs: Optional[int] = None,
                           hub_paths: Optional[HubPathCache] = None,
                           limit: Optional[int] = None) -> List[Path]:
    """
    Все допустимые простые пути не длиннее max_legs ног (None: без ограничения).

    С кэшем hub_paths пути собираются из готовых путей между хабами,
    иначе выполняется обход в глубину. Результат упорядочен по path_order_key
    на канале взвешенной стоимости.

    Raises:
        ResourceLimitError: путей больше limit
    """
    if max_legs is not None and max_legs < 1:
        return []
    source = _spliced_paths(graph, max_legs, hub_paths) if hub_paths is not None else _dfs_paths(graph, max_legs)
    paths = []
    for arcs in source:
        if not arcs or not _is_valid(arcs):
            continue
        paths.append(graph.make_path(arcs))
        if limit is not None and len(paths) > limit:
            raise ResourceLimitError(
                f"Поездка {graph.trip_id}: больше {limit} путей; "
                "включите предобработку или увеличьте ODMTS_PATH_CAP"
            )
    paths.sort(key=lambda p: path_order_key(p.weighted_cost, p.legs))
    return paths


def shortest_costs_from(graph: TripGraph, source: str) -> Dict[str, float]:
    """Кратчайшие взвешенные стоимости из source во все достижимые вершины."""
    return nx.single_source_dijkstra_path_length(graph.to_networkx(), source, weight="weight")


def shortest_costs_to(graph: TripGraph, target: str) -> Dict[str, float]:
    """Кратчайшие взвешенные стоимости из всех вершин в target."""
    reverse = graph.to_networkx().reverse(copy=False)
    return nx.single_source_dijkstra_path_length(reverse, target, weight="weight")
