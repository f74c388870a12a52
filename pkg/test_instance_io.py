"""
Тесты чтения и записи файлов экземпляров (JSON-схема odmts-da/1).
"""
import copy
import json

import pytest

from src import config
from src.errors import DataError, InstanceValidationError
from src.instance_io import dumps_instance, instance_from_dict, instance_to_dict, load_instance, save_instance
from src.model import TripClass


def _toy_payload():
    return json.loads(config.TOY_INSTANCE_PATH.read_text(encoding="utf-8"))


def _minimal_payload():
    return {
        "schema": config.INSTANCE_SCHEMA_ID,
        "name": "minimal",
        "units": {"time": "min", "distance": "km"},
        "stops": [{"id": "A"}, {"id": "B"}],
        "hubs": [],
        "arcs": [],
        "car_time": {"unit": "min", "values": [[0, 5], [5, 0]]},
        "car_dist": {"unit": "km", "values": [[0, 3], [3, 0]]},
        "costs": {"theta": 0.5},
        "trips": [{"id": "t1", "origin": "A", "destination": "B", "riders": 1}],
    }


def test_load_toy():
    """Тест: встроенный игрушечный экземпляр"""
    instance, trips, params, choice_spec = load_instance()
    assert len(instance.stops) == 5
    assert len(instance.hubs) == 3
    assert len(instance.arcs) == 6
    assert len(trips) == 3
    assert [t.trip_class for t in trips] == [TripClass.CORE, TripClass.LATENT, TripClass.LATENT]
    assert instance.fixed_arcs == frozenset()
    assert instance.distance_unit == "km"
    assert params.theta == 0.5
    assert choice_spec == {"kind": "duration_and_transfers"}


def test_save_load_save_is_stable(tmp_path):
    loaded = load_instance()
    first = save_instance(tmp_path / "a.json", *loaded)
    second = save_instance(tmp_path / "b.json", *load_instance(first))
    assert first.read_bytes() == second.read_bytes()


def test_to_dict_matches_source():
    loaded = load_instance()
    assert instance_to_dict(*loaded) == _toy_payload()


def test_minimal_instance():
    """Без хабов и дуг горизонт не нужен; класс поездки по умолчанию core."""
    instance, trips, _, _ = instance_from_dict(_minimal_payload())
    assert instance.hubs == ()
    assert instance.arcs == {}
    assert trips[0].trip_class == TripClass.CORE
    assert "arcs" in dumps_instance(instance_to_dict(instance, trips, load_instance().params))


def test_hub_not_a_stop():
    payload = _toy_payload()
    payload["hubs"].append("h9")
    with pytest.raises(InstanceValidationError) as info:
        instance_from_dict(payload)
    assert any("h9" in o for o in info.value.offenders)


def test_unit_mismatch():
    payload = _toy_payload()
    payload["car_time"]["unit"] = "s"
    with pytest.raises(InstanceValidationError) as info:
        instance_from_dict(payload)
    assert info.value.field_path == "$.car_time.unit"


@pytest.mark.parametrize("mutate, field_path", [
    (lambda p: p["trips"][0].update(riders=0), "$.trips[0].riders"),
    (lambda p: p["costs"].update(theta=1.5), "$.costs.theta"),
    (lambda p: p["arcs"][2].update(frequency=0), "$.arcs[2].frequency"),
    (lambda p: p.pop("stops"), "$"),
])
def test_schema_errors(mutate, field_path):
    payload = _toy_payload()
    mutate(payload)
    with pytest.raises(InstanceValidationError) as info:
        instance_from_dict(payload)
    assert info.value.field_path == field_path
    assert info.value.offenders


def test_invariant_errors():
    payload = _toy_payload()
    payload["trips"][0]["destination"] = "Z"
    with pytest.raises(InstanceValidationError) as info:
        instance_from_dict(payload)
    assert info.value.field_path == "$.trips"

    payload = _toy_payload()
    payload["arcs"].append(copy.deepcopy(payload["arcs"][0]))
    with pytest.raises(InstanceValidationError):
        instance_from_dict(payload)

    payload = _toy_payload()
    payload["arcs"][0]["fixed"] = True
    with pytest.raises(InstanceValidationError) as info:
        instance_from_dict(payload)
    assert any("h1" in o for o in info.value.offenders)


def test_latent_trip_needs_choice_data():
    payload = _toy_payload()
    del payload["trips"][1]["t_cur"]
    with pytest.raises(InstanceValidationError):
        instance_from_dict(payload)


def test_missing_and_broken_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_instance(tmp_path / "nope.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(DataError):
        load_instance(broken)
