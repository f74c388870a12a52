"""
Общие фикстуры тестов: игрушечный экземпляр и случайный корпус.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
import pytest
from hypothesis import strategies as st

from src import config
from src.costs import CostTables
from src.generator import GeneratorSpec, generate_instance
from src.instance_io import LoadedInstance, load_instance
from src.model import HubArc, NetworkInstance

# Маленькие экземпляры: 4 неопределённые дуги, оракул перебирает не больше 16 дизайнов
CORPUS_SPEC = dict(n_stops=8, n_hubs=3, n_fixed_arcs=2, n_candidate_arcs=6, n_core=3, n_latent=4)
# Полный размер: 12 неопределённых дуг, 30 поездок
FULL_SCALE_SPEC = dict(n_stops=20, n_hubs=5, n_fixed_arcs=2, n_candidate_arcs=14, n_core=12, n_latent=18)


def corpus_instance(seed: int, **overrides) -> LoadedInstance:
    spec = GeneratorSpec(seed=seed, **{**CORPUS_SPEC, **overrides})
    return LoadedInstance(*generate_instance(spec))


def corpus_seeds(limit: int = None):
    n = config.ACCEPTANCE_CORPUS_SIZE
    return range(n if limit is None else min(n, limit))


def full_scale_instance(seed: int, **overrides) -> LoadedInstance:
    return corpus_instance(seed, **{**FULL_SCALE_SPEC, **overrides})


def full_scale_seeds(limit: int = None):
    n = config.FULL_SCALE_CORPUS_SIZE
    return range(n if limit is None else min(n, limit))


TIE_STOPS = ("o", "d", "h1", "h2", "h3")
TIE_HUB_PAIRS = [(h, l) for h in TIE_STOPS[2:] for l in TIE_STOPS[2:] if h != l]


def tie_instance(car_time, car_dist, hub_time, hub_dist, hub_wait) -> NetworkInstance:
    """
    Сеть o, d и три хаба с целыми данными из малого диапазона:
    равные стоимости путей с разной длительностью здесь обычное дело.
    """
    n = len(TIE_STOPS)

    def matrix(values):
        m = np.array(values, dtype=float).reshape(n, n)
        np.fill_diagonal(m, 0.0)
        return m

    arcs = {
        (h, l): HubArc(h, l, float(t), float(s), 1, float(w))
        for (h, l), t, s, w in zip(TIE_HUB_PAIRS, hub_time, hub_dist, hub_wait)
    }
    return NetworkInstance("ties", "min", TIE_STOPS, TIE_STOPS[2:], arcs, matrix(car_time), matrix(car_dist))


def _small_ints(n, low, high):
    return st.lists(st.integers(low, high), min_size=n, max_size=n)


TIE_DATA = st.fixed_dictionaries({
    "car_time": _small_ints(len(TIE_STOPS) ** 2, 1, 4),
    "car_dist": _small_ints(len(TIE_STOPS) ** 2, 1, 4),
    "hub_time": _small_ints(len(TIE_HUB_PAIRS), 1, 4),
    "hub_dist": _small_ints(len(TIE_HUB_PAIRS), 1, 4),
    "hub_wait": _small_ints(len(TIE_HUB_PAIRS), 1, 3),
})


@pytest.fixture
def toy() -> LoadedInstance:
    return load_instance()


@pytest.fixture
def toy_tables(toy) -> CostTables:
    return CostTables.build(toy.instance, toy.params)


@pytest.fixture
def trips_by_id(toy):
    return {t.id: t for t in toy.trips}
