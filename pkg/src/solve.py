"""
Решение построенных моделей: расшифровка дизайна, проверка пересчётом ответа
пассажиров и алгоритм ленивых ограничений для P-PATH.
"""

import logging
import time
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .backends import BackendResult, SolveLimits, SolverBackend, SolverStatus
from .choice import ChoiceModel
from .costs import CostTables, PathClass
from .errors import InternalError, InvalidArgumentError, SolverLimitError
from .mip_build import BuildOptions, MipModel, build_ppath
from .model import ArcKey, Trip
from .oracle import DesignSolution, FollowerMode, evaluate_design
from .path_enum import PathSets
from .preprocess import PreprocessContext

logger = logging.getLogger(__name__)

VERIFY_RTOL = 1e-6


def _run(backend: SolverBackend, model: MipModel, limits: SolveLimits) -> BackendResult:
    result = backend.solve(model, limits)
    if result.status == SolverStatus.INFEASIBLE:
        raise InternalError(f"Модель {model.name} недопустима, хотя дизайн из фиксированных дуг всегда допустим")
    if not result.has_solution:
        raise SolverLimitError(f"Решатель остановился по лимиту без допустимого решения ({model.name})")
    return result


def decode_design(model: MipModel, values: Mapping[str, float]) -> List[ArcKey]:
    return sorted(arc for arc, name in model.catalog.z.items() if values.get(name, 0.0) > 0.5)


def _verify(model: MipModel, result: BackendResult, choice_model: ChoiceModel) -> DesignSolution:
    ctx = model.context
    tables = ctx.tables
    removals = ctx.preprocess.removals if ctx.preprocess is not None else None
    arcs = decode_design(model, result.values)
    in_model_units = evaluate_design(tables, ctx.trips, choice_model, arcs, FollowerMode.GENERALIZED, removals)
    if tables.is_lex:
        solution = evaluate_design(tables.original, ctx.trips, choice_model, arcs, FollowerMode.LEX, removals)
        solution.scaled_objective = in_model_units.objective
    else:
        solution = in_model_units
    scale = max(1.0, abs(result.objective))
    solution.verified = abs(in_model_units.objective - result.objective) <= VERIFY_RTOL * scale
    if not solution.verified:
        logger.warning(
            f"Проверка не пройдена: цель решателя {result.objective:.9g}, "
            f"пересчёт ответа пассажиров {in_model_units.objective:.9g}"
        )
    solution.backend_objective = result.objective
    solution.status = result.status.value
    solution.gap = result.gap
    solution.method = model.name
    return solution


def solve_model(backend: SolverBackend, model: MipModel, limits: SolveLimits = SolveLimits(),
                choice_model: Optional[ChoiceModel] = None) -> DesignSolution:
    """
    Решает модель и проверяет решение.

    Открытые дуги берутся из z; ответ каждой поездки пересчитывается
    независимо, целевая функция сравнивается с целью решателя.

    Raises:
        InternalError: решатель признал модель недопустимой
        SolverLimitError: лимит исчерпан без допустимого решения
    """
    choice_model = choice_model or (model.context.choice_model if model.context else None)
    if model.context is None or choice_model is None:
        raise InvalidArgumentError("Для проверки решения нужны контекст модели и модель выбора")
    began = time.perf_counter()
    result = _run(backend, model, limits)
    solution = _verify(model, result, choice_model)
    solution.timings["solve"] = result.wall_time
    solution.timings["verify"] = time.perf_counter() - began - result.wall_time
    return solution


def _routed_cost(model: MipModel, tables: CostTables, trip_id: str, values: Mapping[str, float]) -> float:
    cat = model.catalog
    cost = sum(tables.tau[arc] for arc, name in cat.x[trip_id].items() if values.get(name, 0.0) > 0.5)
    cost += sum(tables.shuttle_cost(*arc) for arc, name in cat.y[trip_id].items() if values.get(name, 0.0) > 0.5)
    return cost


def default_seed_sets(path_sets: Mapping[str, PathSets]) -> Dict[str, PathSets]:
    """Стартовые наборы: все пути AP из A и всё RP."""
    seeds = {}
    for trip_id, sets in path_sets.items():
        seeds[trip_id] = PathSets(
            trip_id,
            adopt=[p for p in sets.adopt if sets.tags.get(p.key) == PathClass.AP],
            reject_profitable=list(sets.reject_profitable),
            tags=sets.tags,
            removed=sets.removed,
        )
    return seeds


def lazy_constraint_solve(backend: SolverBackend, tables: CostTables, trips: Sequence[Trip],
                          path_sets: Mapping[str, PathSets], choice_model: ChoiceModel,
                          ctx: Optional[PreprocessContext] = None,
                          seed_sets: Optional[Mapping[str, PathSets]] = None,
                          limits: SolveLimits = SolveLimits(),
                          options: BuildOptions = BuildOptions()) -> Tuple[DesignSolution, List[Dict]]:
    """
    Алгоритм ленивых ограничений: решает P-PATH на подмножествах путей и
    добавляет пропущенные пути, нарушающие оптимальность ответа пассажира.

    Пропущенный путь из A добавляется, если он доступен и g <= g_temp;
    путь из RP: если доступен и g < g_temp.

    Returns:
        Решение последней итерации и журнал итераций
    """
    temp = {k: PathSets(v.trip_id, list(v.adopt), list(v.reject_profitable), None, v.tags, v.removed)
            for k, v in (seed_sets or default_seed_sets(path_sets)).items()}
    eps = tables.eps
    log: List[Dict] = []
    began = time.perf_counter()
    while True:
        model = build_ppath(tables, trips, temp, ctx, options, choice_model)
        result = _run(backend, model, limits)
        arcs = frozenset(decode_design(model, result.values))
        added = 0
        for trip_id, full in sorted(path_sets.items()):
            current = temp[trip_id]
            if full.removed is not None or trip_id not in model.catalog.g:
                continue
            g_temp = _routed_cost(model, tables, trip_id, result.values)
            known = {p.key for p in current.adopt}
            for path in full.adopt:
                if path.key not in known and path.hub_legs <= arcs and path.weighted_cost <= g_temp + eps:
                    current.adopt.append(path)
                    added += 1
            known = {p.key for p in current.reject_profitable}
            for path in full.reject_profitable:
                if path.key not in known and path.hub_legs <= arcs and path.weighted_cost < g_temp - eps:
                    current.reject_profitable.append(path)
                    added += 1
        entry = {
            "iteration": len(log) + 1,
            "objective": result.objective,
            "added_paths": added,
            "open_arcs": len(arcs),
            **model.size(),
        }
        log.append(entry)
        logger.info(f"Ленивые ограничения: итерация {entry['iteration']}, цель {result.objective:.6f}, "
                    f"добавлено путей {added}")
        if added == 0:
            break
    solution = _verify(model, result, choice_model)
    solution.method = "lazy"
    solution.timings["lazy"] = time.perf_counter() - began
    return solution, log
