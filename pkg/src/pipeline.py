"""
Сквозной запуск: загрузка -> предобработка -> перечисление путей -> модель -> решение -> отчёт.

Функции используются подкомандами CLI и тестами.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from .backends import SolveLimits, SolverBackend, get_backend
from .choice import ChoiceModel
from .costs import CostTables, apply_lex_transform
from .errors import InvalidArgumentError
from .instance_io import LoadedInstance
from .mip_build import BuildOptions, Formulation, MipModel, build_cpath, build_ppath
from .oracle import DesignSolution, FollowerMode, bilevel_oracle
from .path_enum import PathSets, check_lex_resolution, enumerate_pe, enumerate_pe_dcm
from .preprocess import PreprocessContext, PreprocessReport, PreprocessSteps, run_preprocessing
from .report import RunReport, comparison_frame
from .solve import lazy_constraint_solve, solve_model

logger = logging.getLogger(__name__)

ENUM_PE = "pe"
ENUM_PE_DCM = "pe-dcm"


@dataclass
class PipelineOptions:
    formulation: Formulation = Formulation.PPATH
    enum: Optional[str] = None
    follower: FollowerMode = FollowerMode.GENERALIZED
    steps: PreprocessSteps = field(default_factory=PreprocessSteps)
    lazy: bool = False
    build: BuildOptions = field(default_factory=BuildOptions)
    limits: SolveLimits = field(default_factory=SolveLimits)

    @property
    def enum_algorithm(self) -> str:
        """По умолчанию PE-DCM для P-PATH и PE для C-PATH (C-PATH нужен весь Pi)."""
        if self.enum is not None:
            return self.enum
        return ENUM_PE if Formulation(self.formulation) == Formulation.CPATH else ENUM_PE_DCM


@dataclass
class Prepared:
    """Всё, что нужно построителю модели."""
    loaded: LoadedInstance
    choice_model: ChoiceModel
    tables: CostTables
    ctx: PreprocessContext
    path_sets: Dict[str, PathSets]
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def trips(self):
        return self.loaded.trips

    def preprocess_report(self) -> PreprocessReport:
        return PreprocessReport.from_context(self.ctx, self.path_sets)


def make_tables(loaded: LoadedInstance, follower: FollowerMode) -> CostTables:
    if FollowerMode(follower) == FollowerMode.LEX:
        return apply_lex_transform(loaded.params, loaded.instance)
    return CostTables.build(loaded.instance, loaded.params)


def enumerate_paths(tables: CostTables, loaded: LoadedInstance, choice_model: ChoiceModel,
                    ctx: Optional[PreprocessContext], algorithm: str) -> Dict[str, PathSets]:
    if algorithm == ENUM_PE:
        return enumerate_pe(tables, choice_model, loaded.trips, ctx)
    if algorithm == ENUM_PE_DCM:
        path_sets, _ = enumerate_pe_dcm(tables, loaded.trips, ctx=ctx, choice_model=choice_model)
        return path_sets
    raise InvalidArgumentError(f"Неизвестный алгоритм перечисления '{algorithm}'; допустимы pe, pe-dcm")


def prepare(loaded: LoadedInstance, options: PipelineOptions) -> Prepared:
    """Таблицы стоимости, предобработка и перечисление путей."""
    timings = {}
    choice_model = loaded.choice_model
    tables = make_tables(loaded, options.follower)

    began = time.perf_counter()
    ctx = run_preprocessing(tables, loaded.trips, choice_model, options.steps)
    timings["preprocess"] = time.perf_counter() - began

    began = time.perf_counter()
    path_sets = enumerate_paths(tables, loaded, choice_model, ctx, options.enum_algorithm)
    timings["enumerate"] = time.perf_counter() - began
    check_lex_resolution(tables, path_sets)
    return Prepared(loaded, choice_model, tables, ctx, path_sets, timings)


def build_model(prepared: Prepared, formulation: Formulation, build: BuildOptions) -> MipModel:
    if Formulation(formulation) == Formulation.CPATH:
        return build_cpath(prepared.tables, prepared.trips, prepared.path_sets, prepared.ctx, build,
                           choice_model=prepared.choice_model)
    return build_ppath(prepared.tables, prepared.trips, prepared.path_sets, prepared.ctx, build,
                       choice_model=prepared.choice_model)


def run_solve(loaded: LoadedInstance, options: PipelineOptions,
              backend: Optional[SolverBackend] = None,
              export_path: Optional[Path] = None) -> RunReport:
    """
    Подкоманда solve.

    С options.lazy модель P-PATH решается алгоритмом ленивых ограничений,
    полная модель строится только для экспорта; размер в отчёте берётся
    из последней итерации.
    """
    backend = backend or get_backend()
    prepared = prepare(loaded, options)
    if options.lazy and Formulation(options.formulation) != Formulation.PPATH:
        raise InvalidArgumentError("Ленивые ограничения применимы только к P-PATH")

    model = None
    if not options.lazy or export_path is not None:
        began = time.perf_counter()
        model = build_model(prepared, options.formulation, options.build)
        prepared.timings["build"] = time.perf_counter() - began
    if export_path is not None:
        backend.export(model, export_path)

    lazy_log: List[Dict] = []
    if options.lazy:
        solution, lazy_log = lazy_constraint_solve(
            backend, prepared.tables, prepared.trips, prepared.path_sets, prepared.choice_model,
            ctx=prepared.ctx, limits=options.limits, options=options.build,
        )
        model_size = {key: lazy_log[-1][key] for key in ("variables", "binaries", "constraints")}
    else:
        solution = solve_model(backend, model, options.limits, prepared.choice_model)
        model_size = model.size()
    solution.timings.update(prepared.timings)
    return RunReport.build(loaded.instance.name, solution, prepared.tables, prepared.preprocess_report(),
                           model_size, lazy_log)


def run_oracle(loaded: LoadedInstance, follower: FollowerMode = FollowerMode.GENERALIZED,
               cross_check: bool = False) -> DesignSolution:
    tables = make_tables(loaded, follower)
    return bilevel_oracle(tables, loaded.trips, loaded.choice_model, follower, cross_check=cross_check)


def run_compare(loaded: LoadedInstance, options: PipelineOptions,
                backend: Optional[SolverBackend] = None) -> Tuple[pd.DataFrame, Dict[str, DesignSolution]]:
    """
    Подкоманда compare: P-PATH, C-PATH, ленивые ограничения и оракул на одном экземпляре.

    C-PATH строится на путях PE, остальные модели: на путях выбранного алгоритма.
    """
    backend = backend or get_backend()
    limits = options.limits
    solutions: Dict[str, DesignSolution] = {}

    ppath_opts = PipelineOptions(Formulation.PPATH, options.enum, options.follower, options.steps,
                                 build=options.build, limits=limits)
    prepared = prepare(loaded, ppath_opts)
    model = build_model(prepared, Formulation.PPATH, options.build)
    solutions["ppath"] = solve_model(backend, model, limits, prepared.choice_model)
    solutions["lazy"], _ = lazy_constraint_solve(
        backend, prepared.tables, prepared.trips, prepared.path_sets, prepared.choice_model,
        ctx=prepared.ctx, limits=limits, options=options.build,
    )

    cpath_opts = PipelineOptions(Formulation.CPATH, ENUM_PE, options.follower, options.steps,
                                 build=options.build, limits=limits)
    prepared_pe = prepare(loaded, cpath_opts)
    model = build_model(prepared_pe, Formulation.CPATH, options.build)
    solutions["cpath"] = solve_model(backend, model, limits, prepared_pe.choice_model)

    solutions["oracle"] = run_oracle(loaded, options.follower)
    frame = comparison_frame(solutions)
    agree = bool(frame["agrees"].all())
    logger.info(f"Сравнение методов на {loaded.instance.name}: {'согласие' if agree else 'РАСХОЖДЕНИЕ'}")
    return frame, solutions