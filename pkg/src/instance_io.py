"""
Чтение и запись файлов экземпляров ODMTS-DA (JSON, схема odmts-da/1).

Файл содержит остановки (с необязательными координатами), хабы, дуги-кандидаты,
матрицы времени и расстояния на автомобиле, поездки, параметры стоимости и
блок модели выбора. Сохранение каноническое: load -> save -> load даёт тот же файл.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from jsonschema import Draft202012Validator

from . import config
from .choice import ChoiceModel, choice_model_from_spec
from .errors import DataError, InstanceValidationError
from .model import CostParameters, HubArc, NetworkInstance, Trip, TripClass, check_trips

logger = logging.getLogger(__name__)

_NUMBER = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_ID = {"type": "string", "pattern": r"^[A-Za-z0-9_.]+$"}
_MATRIX = {
    "type": "object",
    "required": ["unit", "values"],
    "additionalProperties": False,
    "properties": {
        "unit": {"type": "string"},
        "values": {"type": "array", "items": {"type": "array", "items": _NONNEG}},
    },
}

INSTANCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "name", "units", "stops", "hubs", "arcs", "car_time", "car_dist", "costs", "trips"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": config.INSTANCE_SCHEMA_ID},
        "name": {"type": "string"},
        "units": {
            "type": "object",
            "required": ["time", "distance"],
            "additionalProperties": False,
            "properties": {
                "time": {"enum": list(config.TIME_UNITS)},
                "distance": {"type": "string"},
            },
        },
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "stops": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "additionalProperties": False,
                "properties": {"id": _ID, "x": _NUMBER, "y": _NUMBER},
                "dependentRequired": {"x": ["y"], "y": ["x"]},
            },
        },
        "hubs": {"type": "array", "items": _ID, "uniqueItems": True},
        "arcs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["tail", "head", "time", "dist", "frequency"],
                "additionalProperties": False,
                "properties": {
                    "tail": _ID,
                    "head": _ID,
                    "time": _NONNEG,
                    "dist": _NONNEG,
                    "frequency": {"type": "integer", "minimum": 1},
                    "wait": _NONNEG,
                    "fixed": {"type": "boolean"},
                },
            },
        },
        "car_time": _MATRIX,
        "car_dist": _MATRIX,
        "costs": {
            "type": "object",
            "required": ["theta"],
            "additionalProperties": False,
            "properties": {
                "theta": {"type": "number", "minimum": 0, "maximum": 1},
                "b_dist": _NONNEG,
                "b_time": _NONNEG,
                "w_dist": _NONNEG,
                "w_time": _NONNEG,
                "phi": _NONNEG,
                "cost_basis": {"enum": ["distance", "time"]},
            },
        },
        "choice_model": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["duration_only", "duration_and_transfers"]}},
        },
        "trips": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "origin", "destination", "riders"],
                "additionalProperties": False,
                "properties": {
                    "id": _ID,
                    "origin": _ID,
                    "destination": _ID,
                    "riders": {"type": "integer", "minimum": 1},
                    "class": {"enum": ["core", "latent"]},
                    "alpha": {"type": "number", "exclusiveMinimum": 0},
                    "t_cur": {"type": "number", "exclusiveMinimum": 0},
                    "transfer_tolerance": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}

_VALIDATOR = Draft202012Validator(INSTANCE_SCHEMA)


class LoadedInstance(NamedTuple):
    """Результат load_instance; распаковывается как кортеж из четырёх элементов."""
    instance: NetworkInstance
    trips: List[Trip]
    params: CostParameters
    choice_spec: Dict

    @property
    def choice_model(self) -> ChoiceModel:
        return choice_model_from_spec(self.choice_spec)


def _field_path(parts) -> str:
    path = "$"
    for part in parts:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def validate_document(payload: Dict) -> None:
    """
    Проверяет документ по JSON-схеме.

    Raises:
        InstanceValidationError: с путём к первому нарушившему полю
    """
    errors = sorted(_VALIDATOR.iter_errors(payload), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        first = errors[0]
        raise InstanceValidationError(
            "Файл экземпляра не соответствует схеме " + config.INSTANCE_SCHEMA_ID,
            [f"{_field_path(e.absolute_path)}: {e.message}" for e in errors],
            field_path=_field_path(first.absolute_path),
        )


def _matrix(block: Dict, unit: str, name: str) -> np.ndarray:
    if block["unit"] != unit:
        raise InstanceValidationError(
            f"Единица матрицы {name} не совпадает с объявленной",
            [f"{name}.unit = {block['unit']}, ожидалось {unit}"],
            field_path=f"$.{name}.unit",
        )
    rows = block["values"]
    if len({len(r) for r in rows}) > 1:
        raise InstanceValidationError(f"Матрица {name} не прямоугольная", field_path=f"$.{name}.values")
    return np.array(rows, dtype=float).reshape(len(rows), len(rows[0]) if rows else 0)


def instance_from_dict(payload: Dict) -> LoadedInstance:
    """Строит модель из уже разобранного JSON-документа."""
    validate_document(payload)
    units = payload["units"]
    stops = tuple(s["id"] for s in payload["stops"])
    coords = {s["id"]: (float(s["x"]), float(s["y"])) for s in payload["stops"] if "x" in s}
    arcs = {}
    duplicates = []
    for raw in payload["arcs"]:
        arc = HubArc(raw["tail"], raw["head"], float(raw["time"]), float(raw["dist"]), int(raw["frequency"]),
                     float(raw["wait"]) if "wait" in raw else None, bool(raw.get("fixed", False)))
        if arc.key in arcs:
            duplicates.append(f"дуга {arc.tail}->{arc.head} задана дважды")
        arcs[arc.key] = arc
    if duplicates:
        raise InstanceValidationError("Повторяющиеся дуги", duplicates, field_path="$.arcs")
    instance = NetworkInstance(
        name=payload["name"],
        time_unit=units["time"],
        stops=stops,
        hubs=tuple(payload["hubs"]),
        arcs=arcs,
        car_time=_matrix(payload["car_time"], units["time"], "car_time"),
        car_dist=_matrix(payload["car_dist"], units["distance"], "car_dist"),
        horizon=payload.get("horizon"),
        coords=coords or None,
        distance_unit=units["distance"],
    )
    trips = [
        Trip(
            id=raw["id"],
            origin=raw["origin"],
            destination=raw["destination"],
            riders=int(raw["riders"]),
            trip_class=TripClass(raw.get("class", "core")),
            alpha=raw.get("alpha"),
            t_cur=raw.get("t_cur"),
            transfer_tolerance=raw.get("transfer_tolerance"),
        )
        for raw in payload["trips"]
    ]
    offenders = check_trips(instance, trips)
    if offenders:
        raise InstanceValidationError("Некорректные поездки", offenders, field_path="$.trips")
    params = CostParameters(**payload["costs"])
    choice_spec = dict(payload.get("choice_model") or {"kind": "duration_and_transfers"})
    return LoadedInstance(instance, trips, params, choice_spec)


def load_instance(path: Union[str, Path] = None) -> LoadedInstance:
    """
    Загружает файл экземпляра и проверяет все инварианты.

    Args:
        path: путь к JSON; если None, используется встроенный игрушечный экземпляр

    Returns:
        LoadedInstance(instance, trips, params, choice_spec)

    Raises:
        FileNotFoundError: файла нет
        InstanceValidationError: нарушение схемы или инвариантов
    """
    if path is None:
        path = config.TOY_INSTANCE_PATH
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Файл экземпляра не найден: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"Файл {path} не является корректным JSON: {exc}") from exc
    loaded = instance_from_dict(payload)
    logger.info(
        f"Загружен экземпляр {loaded.instance.name}: остановок {len(loaded.instance.stops)}, "
        f"хабов {len(loaded.instance.hubs)}, дуг {len(loaded.instance.arcs)}, поездок {len(loaded.trips)}"
    )
    return loaded


def _number(value: float):
    value = float(value)
    return int(value) if value.is_integer() else value


def instance_to_dict(instance: NetworkInstance, trips: Sequence[Trip], params: CostParameters,
                     choice_spec: Optional[Dict] = None) -> Dict:
    distance_unit = instance.distance_unit
    stops = []
    for s in instance.stops:
        entry = {"id": s}
        if instance.coords and s in instance.coords:
            x, y = instance.coords[s]
            entry.update(x=_number(x), y=_number(y))
        stops.append(entry)
    arcs = []
    for key in instance.candidate_arcs:
        arc = instance.arcs[key]
        entry = {"tail": arc.tail, "head": arc.head, "time": _number(arc.time), "dist": _number(arc.dist),
                 "frequency": arc.frequency, "fixed": arc.fixed}
        if arc.wait is not None:
            entry["wait"] = _number(arc.wait)
        arcs.append(entry)
    trip_rows = []
    for trip in trips:
        row = {"id": trip.id, "origin": trip.origin, "destination": trip.destination,
               "riders": trip.riders, "class": trip.trip_class.value}
        if trip.alpha is not None:
            row["alpha"] = _number(trip.alpha)
        if trip.t_cur is not None:
            row["t_cur"] = _number(trip.t_cur)
        if trip.transfer_tolerance is not None:
            row["transfer_tolerance"] = trip.transfer_tolerance
        trip_rows.append(row)
    payload = {
        "schema": config.INSTANCE_SCHEMA_ID,
        "name": instance.name,
        "units": {"time": instance.time_unit, "distance": distance_unit},
        "stops": stops,
        "hubs": list(instance.hubs),
        "arcs": arcs,
        "car_time": {"unit": instance.time_unit,
                     "values": [[_number(v) for v in row] for row in instance.car_time]},
        "car_dist": {"unit": distance_unit,
                     "values": [[_number(v) for v in row] for row in instance.car_dist]},
        "costs": {
            "theta": _number(params.theta),
            "b_dist": _number(params.b_dist),
            "b_time": _number(params.b_time),
            "w_dist": _number(params.w_dist),
            "w_time": _number(params.w_time),
            "phi": _number(params.phi),
            "cost_basis": params.cost_basis.value,
        },
        "choice_model": dict(choice_spec or {"kind": "duration_and_transfers"}),
        "trips": trip_rows,
    }
    if instance.horizon is not None:
        payload["horizon"] = _number(instance.horizon)
    return payload


def dumps_instance(payload: Dict) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def save_instance(path: Union[str, Path], instance: NetworkInstance, trips: Sequence[Trip],
                  params: CostParameters, choice_spec: Optional[Dict] = None) -> Path:
    """Сохраняет экземпляр в каноническом виде (ключи отсортированы, отступ 2)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_instance(instance_to_dict(instance, trips, params, choice_spec)), encoding="utf-8")
    logger.info(f"Экземпляр {instance.name} сохранён в {path}")
    return path
