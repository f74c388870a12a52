"""
Генератор синтетических экземпляров ODMTS-DA.

Координаты остановок выбираются на сетке с шагом 0.1 км, расстояния евклидовы
и замкнуты по неравенству треугольника, времена получаются из расстояний
делением на объявленную скорость. Все величины лежат на мелкой решётке,
поэтому различные стоимости путей не сливаются при лексикографическом
преобразовании.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from shapely.geometry import MultiPoint, Point

from . import config
from .errors import InvalidArgumentError
from .model import CostParameters, HubArc, NetworkInstance, Trip, TripClass

logger = logging.getLogger(__name__)

GRID_KM = 0.1
GEOMETRIES = ("uniform", "clustered")


@dataclass(frozen=True)
class GeneratorSpec:
    """Параметры генерации. n_candidate_arcs считает все дуги Z, включая фиксированные."""
    n_stops: int
    n_hubs: int
    n_fixed_arcs: int
    n_candidate_arcs: int
    n_core: int
    n_latent: int
    seed: int = 0
    geometry: str = "uniform"
    area_km: float = config.GENERATOR_AREA_KM
    car_speed_kmh: float = config.GENERATOR_CAR_SPEED_KMH
    bus_speed_kmh: float = config.GENERATOR_BUS_SPEED_KMH
    horizon: float = config.GENERATOR_HORIZON_MIN
    frequency_range: Tuple[int, int] = config.GENERATOR_FREQUENCY_RANGE
    alpha_range: Tuple[float, float] = config.GENERATOR_ALPHA_RANGE
    transfer_tolerance_range: Tuple[int, int] = config.GENERATOR_TRANSFER_TOLERANCE_RANGE
    riders_range: Tuple[int, int] = config.GENERATOR_RIDERS_RANGE
    theta: float = 0.5
    b_dist: float = 0.5
    w_dist: float = 2.0
    phi: float = 12.0
    name: str = ""

    def problems(self) -> List[str]:
        problems = []
        n_pairs = self.n_hubs * (self.n_hubs - 1)
        if self.n_stops < 2:
            problems.append("нужно не меньше двух остановок")
        if not 0 <= self.n_hubs <= self.n_stops:
            problems.append("число хабов должно лежать в [0, n_stops]")
        if self.n_fixed_arcs < 0 or self.n_fixed_arcs % 2:
            problems.append("фиксированные дуги создаются парами, их число должно быть чётным")
        if self.n_fixed_arcs > self.n_candidate_arcs:
            problems.append("фиксированных дуг больше, чем кандидатов")
        if self.n_candidate_arcs > n_pairs:
            problems.append(f"кандидатов больше, чем упорядоченных пар хабов ({n_pairs})")
        if self.n_core < 0 or self.n_latent < 0:
            problems.append("число поездок должно быть неотрицательным")
        if self.geometry not in GEOMETRIES:
            problems.append(f"геометрия должна быть одной из {GEOMETRIES}")
        cells = int(round(self.area_km / GRID_KM)) + 1
        if self.n_stops > cells * cells:
            problems.append("остановок больше, чем узлов сетки в области")
        if not 0 < self.theta <= 1:
            problems.append("theta должна лежать в (0, 1]")
        if min(self.alpha_range) <= 0 or min(self.riders_range) < 1 or min(self.frequency_range) < 1:
            problems.append("alpha > 0, riders >= 1 и частота >= 1")
        return problems


def _sample_coordinates(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    cells = int(round(spec.area_km / GRID_KM)) + 1
    if spec.geometry == "uniform":
        flat = rng.choice(cells * cells, size=spec.n_stops, replace=False)
        return np.column_stack([flat // cells, flat % cells]).astype(float) * GRID_KM
    # clustered: остановки вокруг нескольких центров, без повторов узлов сетки
    centers = rng.uniform(0.2, 0.8, size=(max(1, spec.n_hubs), 2)) * spec.area_km
    taken: Dict[Tuple[int, int], None] = {}
    while len(taken) < spec.n_stops:
        center = centers[rng.integers(len(centers))]
        point = np.clip(rng.normal(center, spec.area_km / 8), 0, spec.area_km)
        taken.setdefault(tuple(np.rint(point / GRID_KM).astype(int)), None)
    return np.array(list(taken), dtype=float) * GRID_KM


def _closed_distances(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.round(np.sqrt((diff ** 2).sum(axis=2)), 1)
    # после округления неравенство треугольника может нарушаться; замыкаем
    for k in range(len(dist)):
        dist = np.minimum(dist, dist[:, k, None] + dist[None, k, :])
    return np.round(dist, 1)


def _hub_order(coords: np.ndarray, n_hubs: int) -> List[int]:
    """Хабы выбираются жадно как самые удалённые друг от друга остановки, начиная с ближайшей к центру."""
    if n_hubs == 0:
        return []
    centroid = MultiPoint([Point(x, y) for x, y in coords]).centroid
    first = min(range(len(coords)), key=lambda i: (Point(coords[i]).distance(centroid), i))
    chosen = [first]
    nearest = np.linalg.norm(coords - coords[first], axis=1)
    while len(chosen) < n_hubs:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.linalg.norm(coords - coords[nxt], axis=1))
    return chosen


def generate_instance(spec: GeneratorSpec) -> Tuple[NetworkInstance, List[Trip], CostParameters, Dict]:
    """
    Генерирует экземпляр по спецификации; результат детерминирован для seed.

    Returns:
        (instance, trips, params, choice_spec), как load_instance

    Raises:
        InvalidArgumentError: спецификация противоречива
    """
    problems = spec.problems()
    if problems:
        raise InvalidArgumentError("Некорректная спецификация генератора: " + "; ".join(problems))
    rng = np.random.default_rng(spec.seed)
    coords = _sample_coordinates(spec, rng)
    stops = tuple(f"s{i:04d}" for i in range(spec.n_stops))
    car_dist = _closed_distances(coords)
    car_time = np.round(car_dist * 60.0 / spec.car_speed_kmh, 2)

    hub_idx = _hub_order(coords, spec.n_hubs)
    hubs = tuple(stops[i] for i in hub_idx)
    pairs = [(a, b) for a in hub_idx for b in hub_idx if a < b]
    pairs.sort(key=lambda p: (car_dist[p], p))
    fixed_pairs = pairs[: spec.n_fixed_arcs // 2]
    fixed = {(a, b) for a, b in fixed_pairs} | {(b, a) for a, b in fixed_pairs}
    others = sorted({(a, b) for a in hub_idx for b in hub_idx if a != b} - fixed)
    extra = spec.n_candidate_arcs - len(fixed)
    picked = [others[i] for i in sorted(rng.choice(len(others), size=extra, replace=False))] if extra else []

    arcs = {}
    low, high = spec.frequency_range
    for a, b in sorted(fixed) + picked:
        frequency = int(rng.integers(low, high + 1))
        arc = HubArc(
            tail=stops[a],
            head=stops[b],
            time=float(np.round(car_dist[a, b] * 60.0 / spec.bus_speed_kmh, 2)),
            dist=float(car_dist[a, b]),
            frequency=frequency,
            wait=float(np.round(spec.horizon / (2 * frequency), 1)),
            fixed=(a, b) in fixed,
        )
        arcs[arc.key] = arc

    instance = NetworkInstance(
        name=spec.name or f"gen_{spec.seed}",
        time_unit="min",
        stops=stops,
        hubs=hubs,
        arcs=arcs,
        car_time=car_time,
        car_dist=car_dist,
        horizon=spec.horizon,
        coords={s: (float(x), float(y)) for s, (x, y) in zip(stops, coords)},
    )

    trips = []
    for k in range(spec.n_core + spec.n_latent):
        o, d = rng.choice(spec.n_stops, size=2, replace=False)
        riders = int(rng.integers(spec.riders_range[0], spec.riders_range[1] + 1))
        if k < spec.n_core:
            trips.append(Trip(f"r{k:05d}", stops[o], stops[d], riders))
            continue
        alpha = float(np.round(rng.uniform(*spec.alpha_range), 1))
        tolerance = int(rng.integers(spec.transfer_tolerance_range[0], spec.transfer_tolerance_range[1] + 1))
        trips.append(Trip(f"r{k:05d}", stops[o], stops[d], riders, TripClass.LATENT,
                          alpha=alpha, t_cur=float(car_time[o, d]), transfer_tolerance=tolerance))

    params = CostParameters(theta=spec.theta, b_dist=spec.b_dist, w_dist=spec.w_dist, phi=spec.phi)
    logger.info(f"Сгенерирован экземпляр {instance.name}: {spec.n_stops} остановок, {len(arcs)} дуг, "
                f"{len(trips)} поездок")
    return instance, trips, params, {"kind": "duration_and_transfers"}
