"""
Тесты взвешенных стоимостей, модели выбора и лексикографического преобразования.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import TIE_DATA, tie_instance
from src.choice import (
    CustomChoice,
    DurationAndTransfers,
    DurationOnly,
    choice_model_from_spec,
    choice_model_to_spec,
)
from src.costs import (
    CostTables,
    PathClass,
    apply_lex_transform,
    classify_path,
    evaluate_choice,
    fare_revenue_weight,
    hub_leg_investment_cost,
    hub_leg_rider_cost,
    lex_scale,
    path_metrics,
    shuttle_leg_cost,
)
from src.errors import InvalidArgumentError
from src.model import CostParameters, HubArc, Leg, LegKind, NetworkInstance, Path, Trip, TripClass
from src.trip_graph import build_trip_graph, enumerate_simple_paths


def _pair_instance(time=20.0, dist=5.0, frequency=16, wait=5.0, fixed=False, car_time=600.0, car_dist=4.0):
    arcs = {
        ("h1", "h2"): HubArc("h1", "h2", time, dist, frequency, wait, fixed),
        ("h2", "h1"): HubArc("h2", "h1", time, dist, frequency, wait, fixed),
    }
    matrix = lambda v: np.array([[0.0, v], [v, 0.0]])
    return NetworkInstance("pair", "min", ("h1", "h2"), ("h1", "h2"), arcs, matrix(car_time), matrix(car_dist))


def test_investment_cost_new_arc():
    """Тест: beta = (1 - theta) n d' b_dist"""
    params = CostParameters(theta=0.001, b_dist=3.87)
    assert hub_leg_investment_cost(_pair_instance(), params, "h1", "h2") == pytest.approx(309.2904)


def test_investment_cost_fixed_arc_and_theta_one():
    params = CostParameters(theta=0.001, b_dist=3.87)
    assert hub_leg_investment_cost(_pair_instance(fixed=True), params, "h1", "h2") == 0.0
    assert hub_leg_investment_cost(_pair_instance(), CostParameters(theta=1.0, b_dist=3.87), "h1", "h2") == 0.0


def test_investment_cost_time_basis():
    params = CostParameters(theta=0.5, b_time=2.0, cost_basis="time")
    # 0.5 * 16 * 20 * 2
    assert hub_leg_investment_cost(_pair_instance(), params, "h1", "h2") == pytest.approx(320.0)


def test_investment_cost_unknown_arc():
    with pytest.raises(InvalidArgumentError):
        hub_leg_investment_cost(_pair_instance(), CostParameters(theta=0.5), "h1", "h3")


def test_rider_cost():
    instance = _pair_instance(time=20.0, wait=5.0)
    assert hub_leg_rider_cost(instance, CostParameters(theta=0.5), "h1", "h2") == pytest.approx(12.5)
    assert hub_leg_rider_cost(instance, CostParameters(theta=0.0), "h1", "h2") == 0.0
    assert hub_leg_rider_cost(_pair_instance(time=10.0), CostParameters(theta=1.0), "h1", "h2") == pytest.approx(15.0)


def test_rider_cost_wait_from_horizon():
    """Без явного ожидания берётся половина интервала движения."""
    arcs = {("h1", "h2"): HubArc("h1", "h2", 10.0, 1.0, 4), ("h2", "h1"): HubArc("h2", "h1", 10.0, 1.0, 4)}
    zeros = np.zeros((2, 2))
    instance = NetworkInstance("h", "min", ("h1", "h2"), ("h1", "h2"), arcs, zeros, zeros, horizon=60.0)
    assert hub_leg_rider_cost(instance, CostParameters(theta=1.0), "h1", "h2") == pytest.approx(17.5)


def test_shuttle_cost():
    instance = _pair_instance(car_time=600.0, car_dist=4.0)
    assert shuttle_leg_cost(instance, CostParameters(theta=0.001, w_dist=1.0), "h1", "h2") == pytest.approx(4.596)
    assert shuttle_leg_cost(instance, CostParameters(theta=1.0, w_dist=1.0), "h1", "h2") == pytest.approx(600.0)
    three = _pair_instance(car_dist=3.0)
    assert shuttle_leg_cost(three, CostParameters(theta=0.0, w_dist=1.0), "h1", "h2") == pytest.approx(3.0)
    with pytest.raises(InvalidArgumentError):
        shuttle_leg_cost(instance, CostParameters(theta=0.5), "h1", "h1")


def test_fare_revenue_weight():
    assert fare_revenue_weight(CostParameters(theta=1.0, phi=2.5)) == 0.0
    assert fare_revenue_weight(CostParameters(theta=0.001, phi=2.5)) == pytest.approx(2.4975)
    assert round(fare_revenue_weight(CostParameters(theta=7.25 / 67.25, phi=2.5)), 4) == 2.2305


def test_toy_tables(toy_tables):
    """Тест: значения таблиц игрушечного экземпляра"""
    assert toy_tables.phi_bar == pytest.approx(12.0)
    assert toy_tables.beta[("h1", "h2")] == pytest.approx(20.0)
    assert toy_tables.beta[("h1", "h3")] == pytest.approx(40.0)
    assert toy_tables.tau[("h1", "h2")] == pytest.approx(7.5)
    assert toy_tables.tau[("h3", "h2")] == pytest.approx(13.5)
    assert toy_tables.shuttle_cost("A", "B") == pytest.approx(15.0)
    assert toy_tables.shuttle_cost("A", "h1") == pytest.approx(1.25)


def test_path_metrics_matches_tables(toy, toy_tables):
    legs = (Leg("A", "h1", LegKind.SHUTTLE), Leg("h1", "h2", LegKind.HUB), Leg("h2", "B", LegKind.SHUTTLE))
    path = toy_tables.make_path("c1", legs)
    g, t, l = path_metrics(toy.instance, toy.params, path)
    assert (g, t, l) == pytest.approx((10.0, 18.0, 2))
    assert path.weighted_cost == pytest.approx(g)
    direct = toy_tables.make_path("c1", (Leg("A", "B", LegKind.SHUTTLE),))
    assert path_metrics(toy.instance, toy.params, direct) == pytest.approx((15.0, 18.0, 0))


def test_path_metrics_compositional(toy, toy_tables, trips_by_id):
    """g пути равна сумме tau и gamma по ногам для всех путей поездки."""
    graph = build_trip_graph(toy_tables, trips_by_id["c1"])
    for path in enumerate_simple_paths(graph):
        g, t, _ = path_metrics(toy.instance, toy.params, path)
        assert path.weighted_cost == pytest.approx(g)
        assert path.duration == pytest.approx(t)


def test_invalid_paths_rejected():
    with pytest.raises(InvalidArgumentError):
        Path("r", (Leg("o", "h", LegKind.SHUTTLE), Leg("h", "d", LegKind.SHUTTLE)), 0.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        Path("r", (Leg("o", "h1", LegKind.HUB), Leg("h1", "h2", LegKind.SHUTTLE), Leg("h2", "d", LegKind.HUB)),
             0.0, 0.0)


def _latent(alpha=1.5, t_cur=10.0, tolerance=2):
    return Trip("r", "o", "d", 1, TripClass.LATENT, alpha=alpha, t_cur=t_cur, transfer_tolerance=tolerance)


def _path(duration, legs=3):
    if legs == 1:
        return Path("r", (Leg("o", "d", LegKind.SHUTTLE),), 1.0, duration)
    hubs = [f"h{i}" for i in range(legs - 1)]
    nodes = ["o"] + hubs + ["d"]
    kinds = [LegKind.SHUTTLE] + [LegKind.HUB] * (legs - 2) + [LegKind.SHUTTLE]
    return Path("r", tuple(Leg(a, b, k) for a, b, k in zip(nodes, nodes[1:], kinds)), 1.0, duration)


def test_choice_models():
    """Тест: модели выбора по длительности и пересадкам"""
    trip = _latent(alpha=1.5, t_cur=10.0, tolerance=2)
    assert evaluate_choice(DurationOnly(), trip, _path(15.0))
    assert not evaluate_choice(DurationOnly(), trip, _path(15.1))
    # четыре пересадки при допуске 2
    assert evaluate_choice(DurationOnly(), trip, _path(5.0, legs=5))
    assert not evaluate_choice(DurationAndTransfers(), trip, _path(5.0, legs=5))
    assert evaluate_choice(DurationAndTransfers(), trip, _path(15.0, legs=3))
    custom = CustomChoice(lambda r, p: p.transfers == 0, "direct_only")
    assert evaluate_choice(custom, trip, _path(100.0, legs=1))
    assert not evaluate_choice(custom, trip, _path(1.0))


def test_choice_rejects_core_trip():
    with pytest.raises(InvalidArgumentError):
        evaluate_choice(DurationOnly(), Trip("c", "o", "d", 1), _path(1.0))


def test_choice_spec():
    for model in (DurationOnly(), DurationAndTransfers()):
        assert type(choice_model_from_spec(choice_model_to_spec(model))) is type(model)
    assert isinstance(choice_model_from_spec(None), DurationAndTransfers)
    with pytest.raises(InvalidArgumentError):
        choice_model_from_spec({"kind": "logit"})
    with pytest.raises(InvalidArgumentError):
        choice_model_to_spec(CustomChoice(lambda r, p: True))


@given(
    adopts=st.booleans(),
    g=st.floats(min_value=0, max_value=1e4, allow_nan=False),
    phi_bar=st.floats(min_value=0, max_value=1e4, allow_nan=False),
)
def test_classification_is_partition(adopts, g, phi_bar):
    tag = classify_path(adopts, g, phi_bar)
    profitable = g < phi_bar - 1e-9
    expected = {
        (True, True): PathClass.AP,
        (True, False): PathClass.ANP,
        (False, True): PathClass.RP,
        (False, False): PathClass.RNP,
    }[(adopts, profitable)]
    assert tag == expected


def test_profit_boundary_is_not_profitable():
    assert classify_path(True, 12.0, 12.0) == PathClass.ANP
    assert classify_path(False, 12.0, 12.0) == PathClass.RNP


@given(duration=st.floats(min_value=0, max_value=100, allow_nan=False), transfers=st.integers(0, 5))
def test_choice_is_pure(duration, transfers):
    trip = _latent()
    path = _path(duration, legs=transfers + 1) if transfers != 1 else _path(duration, legs=1)
    model = DurationAndTransfers()
    assert model.adopts(trip, path) == model.adopts(trip, path)


def test_lex_scale_toy(toy):
    # T_max = 2 * 30 + 2 * 15 + 4 * 27 = 198
    assert lex_scale(toy.instance) == pytest.approx(1e5)


def test_lex_transform_values(toy, toy_tables):
    lex = apply_lex_transform(toy.params, toy.instance)
    assert lex.is_lex and lex.original is not toy_tables
    assert lex.tau[("h1", "h2")] == pytest.approx(1e5 * 7.5 + 15.0)
    assert lex.beta[("h1", "h2")] == pytest.approx(1e5 * 20.0)
    assert lex.phi_bar == pytest.approx(1e5 * 12.0)
    assert lex.shuttle_cost("A", "B") == pytest.approx(1e5 * 15.0 + 18.0)
    with pytest.raises(InvalidArgumentError):
        apply_lex_transform(toy.params, toy.instance, m_lex=0.0)


def test_lex_transform_with_zero_tau(toy):
    """При theta = 0 tau = 0 и преобразованная стоимость равна чистому времени."""
    params = CostParameters(theta=0.0, b_dist=1.0, w_dist=1.0, phi=24.0)
    lex = apply_lex_transform(params, toy.instance)
    assert lex.tau[("h1", "h2")] == pytest.approx(15.0)


def test_lex_argmin_matches_lexicographic_order(toy, trips_by_id):
    lex = apply_lex_transform(toy.params, toy.instance)
    base = lex.original
    for trip in toy.trips:
        paths = enumerate_simple_paths(build_trip_graph(lex, trip))
        best_hat = min(p.weighted_cost for p in paths)
        hat_argmin = {p.key for p in paths if p.weighted_cost <= best_hat + lex.eps}
        repriced = [base.reprice(p) for p in paths]
        lex_best = min((p.weighted_cost, p.duration) for p in repriced)
        lex_argmin = {
            p.key for p in repriced
            if abs(p.weighted_cost - lex_best[0]) <= 1e-9 and abs(p.duration - lex_best[1]) <= 1e-9
        }
        assert hat_argmin == lex_argmin


def test_cost_tables_reprice(toy_tables):
    path = toy_tables.make_path("c1", (Leg("A", "B", LegKind.SHUTTLE),))
    assert toy_tables.reprice(path) == path
    assert isinstance(toy_tables, CostTables)


@settings(max_examples=60, deadline=None)
@given(data=TIE_DATA)
def test_lex_argmin_with_cost_ties(data):
    """Пути с равной g и разной длительностью: минимум g^ выбирает самые быстрые из них."""
    instance = tie_instance(**data)
    lex = apply_lex_transform(CostParameters(theta=0.5, b_dist=1.0, w_dist=1.0, phi=24.0), instance)
    base = lex.original
    paths = enumerate_simple_paths(build_trip_graph(lex, Trip("r", "o", "d", 1)))
    best_hat = min(p.weighted_cost for p in paths)
    hat_argmin = {p.key for p in paths if p.weighted_cost <= best_hat + lex.eps}
    repriced = [base.reprice(p) for p in paths]
    g_min = min(p.weighted_cost for p in repriced)
    cheapest = [p for p in repriced if abs(p.weighted_cost - g_min) <= 1e-9]
    t_min = min(p.duration for p in cheapest)
    assert hat_argmin == {p.key for p in cheapest if abs(p.duration - t_min) <= 1e-9}
