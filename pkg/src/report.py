"""
Отчёты о запуске: статистика принятия, размеры модели, файлы результатов.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

import pandas as pd
from shapely.geometry import LineString, Point, mapping

from . import config
from .costs import CostTables
from .errors import InvalidArgumentError
from .oracle import DesignSolution
from .preprocess import PreprocessReport

logger = logging.getLogger(__name__)


def _share(part: int, whole: int) -> float:
    return round(100.0 * part / whole, 2) if whole else 0.0


@dataclass
class AdoptionStats:
    """Счётчики по латентным поездкам и пассажирам; проценты считаются от счётчиков."""
    latent_trips: int = 0
    latent_riders: int = 0
    adopting_trips: int = 0
    adopting_riders: int = 0
    shuttle_only_riders: int = 0
    hub_using_riders: int = 0
    profitable_riders: int = 0

    @classmethod
    def from_solution(cls, solution: DesignSolution, phi_bar: float, eps: float = config.EPS) -> "AdoptionStats":
        stats = cls()
        for outcome in solution.outcomes.values():
            if not outcome.latent:
                continue
            stats.latent_trips += 1
            stats.latent_riders += outcome.riders
            if not outcome.adopts:
                continue
            stats.adopting_trips += 1
            stats.adopting_riders += outcome.riders
            if outcome.shuttle_only:
                stats.shuttle_only_riders += outcome.riders
            else:
                stats.hub_using_riders += outcome.riders
            if outcome.path.weighted_cost < phi_bar - eps:
                stats.profitable_riders += outcome.riders
        return stats

    def to_dict(self) -> Dict:
        return {
            "latent_trips": self.latent_trips,
            "latent_riders": self.latent_riders,
            "adopting_trips": self.adopting_trips,
            "adopting_riders": self.adopting_riders,
            "adoption_rate_pct": _share(self.adopting_riders, self.latent_riders),
            "shuttle_only_riders": self.shuttle_only_riders,
            "shuttle_only_pct": _share(self.shuttle_only_riders, self.adopting_riders),
            "hub_using_riders": self.hub_using_riders,
            "hub_using_pct": _share(self.hub_using_riders, self.adopting_riders),
            "profitable_riders": self.profitable_riders,
            "profitable_pct": _share(self.profitable_riders, self.adopting_riders),
        }


@dataclass
class RunReport:
    instance_name: str
    solution: DesignSolution
    adoption: AdoptionStats
    preprocess: Optional[PreprocessReport] = None
    model_size: Dict[str, int] = field(default_factory=dict)
    lazy_log: List[Dict] = field(default_factory=list)

    @classmethod
    def build(cls, instance_name: str, solution: DesignSolution, tables: CostTables,
              preprocess: Optional[PreprocessReport] = None, model_size: Optional[Mapping[str, int]] = None,
              lazy_log: Optional[List[Dict]] = None) -> "RunReport":
        # решение всегда в исходных единицах, поэтому порог берётся из исходных таблиц
        base = tables.original
        adoption = AdoptionStats.from_solution(solution, base.phi_bar, base.eps)
        return cls(instance_name, solution, adoption, preprocess, dict(model_size or {}), list(lazy_log or []))

    def to_dict(self) -> Dict:
        sol = self.solution
        return {
            "instance": self.instance_name,
            "method": sol.method,
            "follower_mode": sol.follower_mode,
            "status": sol.status,
            "objective": sol.objective,
            "verified": sol.verified,
            "gap": sol.gap,
            "open_arcs": len(sol.open_arcs),
            "decomposition": {
                "investment": sol.investment,
                "core_cost": sol.core_cost,
                "latent_net_cost": sol.latent_cost,
                "constant_offset": sol.offset,
            },
            "adoption": self.adoption.to_dict(),
            "preprocess": self.preprocess.to_dict() if self.preprocess else None,
            "model_size": self.model_size,
            "lazy_iterations": self.lazy_log,
            "timings": sol.timings,
        }

    def adoption_frame(self) -> pd.DataFrame:
        rows = [
            {
                "trip_id": o.trip_id,
                "class": "latent" if o.latent else "core",
                "riders": o.riders,
                "adopts": o.adopts,
                "shuttle_only": o.shuttle_only,
                "transfers": o.path.transfers,
                "g": o.path.weighted_cost,
                "t": o.path.duration,
                "path": o.path.describe(),
                "removed": o.removed,
            }
            for o in self.solution.outcomes.values()
        ]
        columns = ["trip_id", "class", "riders", "adopts", "shuttle_only", "transfers", "g", "t", "path", "removed"]
        return pd.DataFrame(rows, columns=columns).sort_values("trip_id").reset_index(drop=True)

    def write(self, out_dir: Union[str, Path] = None, tables: Optional[CostTables] = None,
              geojson: bool = False) -> Dict[str, Path]:
        """
        Пишет report.json, adoption.csv, solution.json и при geojson=True design.geojson.

        Returns:
            Словарь имя артефакта -> путь
        """
        out_dir = Path(out_dir) if out_dir else config.OUTPUT_DIR
        out_dir.mkdir(parents=True, exist_ok=True)
        written = {
            "report": out_dir / "report.json",
            "adoption": out_dir / "adoption.csv",
            "solution": out_dir / "solution.json",
        }
        written["report"].write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=2), encoding="utf-8")
        self.adoption_frame().to_csv(written["adoption"], index=False)
        written["solution"].write_text(json.dumps(self.solution.to_dict(), ensure_ascii=False, indent=2),
                                       encoding="utf-8")
        if geojson:
            if tables is None:
                raise InvalidArgumentError("Для GeoJSON нужны таблицы с координатами остановок")
            written["design"] = out_dir / "design.geojson"
            written["design"].write_text(json.dumps(design_geojson(tables, self.solution), ensure_ascii=False),
                                         encoding="utf-8")
        logger.info(f"Отчёт записан в {out_dir}")
        return written


def design_geojson(tables: CostTables, solution: DesignSolution) -> Dict:
    """
    GeoJSON-коллекция: хабы точками, открытые дуги линиями.

    Экземпляры без координат дают пустую коллекцию.
    """
    instance = tables.instance
    coords = instance.coords or {}
    features = []
    for hub in instance.hubs:
        if hub in coords:
            features.append({"type": "Feature", "geometry": mapping(Point(coords[hub])),
                             "properties": {"kind": "hub", "id": hub}})
    fixed = instance.fixed_arcs
    for h, l in solution.open_arcs:
        if h in coords and l in coords:
            arc = instance.arc(h, l)
            features.append({
                "type": "Feature",
                "geometry": mapping(LineString([coords[h], coords[l]])),
                "properties": {"kind": "arc", "tail": h, "head": l, "fixed": (h, l) in fixed,
                               "frequency": arc.frequency},
            })
    return {"type": "FeatureCollection", "features": features}


def comparison_frame(solutions: Mapping[str, DesignSolution], rtol: float = 1e-6) -> pd.DataFrame:
    """
    Таблица согласия методов: цель каждого метода и отклонение от эталона
    (оракул, если есть, иначе первый метод).
    """
    if not solutions:
        return pd.DataFrame(columns=["method", "objective", "scaled_objective", "open_arcs", "adopters",
                                     "delta", "agrees"])
    reference = solutions.get("oracle") or next(iter(solutions.values()))
    # в режиме lex сравнение идёт по масштабированной цели
    ref = reference.scaled_objective
    rows = []
    for method, sol in solutions.items():
        delta = sol.scaled_objective - ref
        rows.append({
            "method": method,
            "objective": sol.objective,
            "scaled_objective": sol.scaled_objective,
            "open_arcs": len(sol.open_arcs),
            "adopters": len(sol.adopters),
            "delta": delta,
            "agrees": abs(delta) <= rtol * max(1.0, abs(ref)),
        })
    return pd.DataFrame(rows)
