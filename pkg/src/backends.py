"""
Адаптеры MIP-решателей.

Адаптер выбирается по имени (переменная окружения ODMTS_SOLVER).
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Type

import mip

from . import config
from .errors import InvalidArgumentError, SolverLimitError
from .mip_build import MipModel, Sense, VarKind

logger = logging.getLogger(__name__)


class SolverStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    LIMIT = "limit"

    @property
    def stopped_by_limit(self) -> bool:
        """CBC возвращает FEASIBLE, если лимит исчерпан до доказательства оптимальности."""
        return self in (SolverStatus.FEASIBLE, SolverStatus.LIMIT)


@dataclass
class SolveLimits:
    time_limit: float = config.DEFAULT_TIME_LIMIT
    gap: float = config.DEFAULT_MIP_GAP
    gap_abs: Optional[float] = None
    threads: int = config.DEFAULT_THREADS
    integer_tol: Optional[float] = None
    seed: Optional[int] = None

    @classmethod
    def exact(cls, **kwargs) -> "SolveLimits":
        """Лимиты для сравнения с оракулом."""
        kwargs.setdefault("gap", config.ORACLE_MIP_GAP)
        kwargs.setdefault("gap_abs", config.ORACLE_MIP_GAP)
        return cls(**kwargs)


@dataclass
class BackendResult:
    status: SolverStatus
    objective: Optional[float] = None
    bound: Optional[float] = None
    values: Dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def has_solution(self) -> bool:
        return self.status != SolverStatus.INFEASIBLE and bool(self.values)

    @property
    def gap(self) -> Optional[float]:
        if self.objective is None or self.bound is None:
            return None
        return abs(self.objective - self.bound) / max(1.0, abs(self.objective))


class SolverBackend(ABC):
    name = "abstract"
    supports_warm_start = False
    supports_priorities = False
    supports_indicators = False

    @abstractmethod
    def solve(self, model: MipModel, limits: SolveLimits) -> BackendResult:
        ...

    @abstractmethod
    def export(self, model: MipModel, path) -> Path:
        ...


_REGISTRY: Dict[str, Type[SolverBackend]] = {}


def register_backend(name: str) -> Callable[[Type[SolverBackend]], Type[SolverBackend]]:
    def decorator(cls: Type[SolverBackend]) -> Type[SolverBackend]:
        cls.name = name
        _REGISTRY[name] = cls
        return cls
    return decorator


def available_backends():
    return sorted(_REGISTRY)


def get_backend(name: Optional[str] = None) -> SolverBackend:
    name = name or config.SOLVER_BACKEND
    if name not in _REGISTRY:
        raise InvalidArgumentError(f"Неизвестный MIP-адаптер '{name}'; доступны: {available_backends()}")
    return _REGISTRY[name]()


def to_python_mip(model: MipModel) -> Tuple[mip.Model, Dict[str, mip.Var]]:
    """Переводит MipModel в модель python-mip (решатель CBC)."""
    m = mip.Model(name=model.name, sense=mip.MINIMIZE, solver_name=mip.CBC)
    m.verbose = 0
    variables = {}
    for var in model.variables.values():
        var_type = mip.BINARY if var.kind == VarKind.BINARY else mip.CONTINUOUS
        ub = mip.INF if var.ub == float("inf") else var.ub
        variables[var.name] = m.add_var(name=var.name, lb=var.lb, ub=ub, var_type=var_type)
    for row in model.constraints:
        expr = mip.xsum(coef * variables[name] for name, coef in row.terms)
        if row.sense == Sense.LE:
            m += expr <= row.rhs, row.name
        elif row.sense == Sense.GE:
            m += expr >= row.rhs, row.name
        else:
            m += expr == row.rhs, row.name
    m.objective = mip.minimize(
        mip.xsum(coef * variables[name] for name, coef in model.objective.items()) + model.offset
    )
    return m, variables


def _write(m: mip.Model, path) -> Path:
    path = Path(path)
    if path.suffix not in (".lp", ".mps"):
        raise InvalidArgumentError(f"Формат экспорта определяется расширением .lp или .mps: {path}")
    path.parent.mkdir(parents=True, exist_ok=True)
    m.write(str(path))
    logger.info(f"Модель записана в {path}")
    return path


@register_backend("cbc")
class CbcBackend(SolverBackend):
    """CBC через python-mip."""

    supports_warm_start = True

    _STATUS = {
        mip.OptimizationStatus.OPTIMAL: SolverStatus.OPTIMAL,
        mip.OptimizationStatus.FEASIBLE: SolverStatus.FEASIBLE,
        mip.OptimizationStatus.INFEASIBLE: SolverStatus.INFEASIBLE,
        mip.OptimizationStatus.INT_INFEASIBLE: SolverStatus.INFEASIBLE,
    }

    def solve(self, model: MipModel, limits: SolveLimits) -> BackendResult:
        m, variables = to_python_mip(model)
        m.max_mip_gap = limits.gap
        if limits.gap_abs is not None:
            m.max_mip_gap_abs = limits.gap_abs
        if limits.integer_tol is not None:
            m.integer_tol = limits.integer_tol
        m.threads = limits.threads
        if limits.seed is not None:
            m.seed = limits.seed
        start = [(variables[v.name], v.start) for v in model.variables.values() if v.start is not None]
        if start:
            m.start = start
        if any(v.priority for v in model.variables.values()):
            logger.debug("CBC через python-mip не принимает приоритеты ветвления; приоритеты пропущены")

        began = time.perf_counter()
        raw_status = m.optimize(max_seconds=limits.time_limit)
        wall = time.perf_counter() - began
        status = self._STATUS.get(raw_status, SolverStatus.LIMIT)
        result = BackendResult(status=status, wall_time=wall)
        if m.num_solutions > 0 and status != SolverStatus.INFEASIBLE:
            result.objective = m.objective_value
            result.bound = m.objective_bound
            result.values = {name: var.x for name, var in variables.items()}
        logger.info(f"CBC: статус {result.status.value}, цель {result.objective}, время {wall:.2f} с")
        return result

    def export(self, model: MipModel, path) -> Path:
        m, _ = to_python_mip(model)
        return _write(m, path)


@register_backend("null")
class NullBackend(SolverBackend):
    """Только экспорт модели в файл; решение не выполняется."""

    def __init__(self, export_path=None):
        self.export_path = Path(export_path) if export_path else config.OUTPUT_DIR / "model.lp"

    def solve(self, model: MipModel, limits: SolveLimits) -> BackendResult:
        path = self.export(model, self.export_path)
        raise SolverLimitError(f"Адаптер null не решает модели; модель записана в {path}")

    def export(self, model: MipModel, path) -> Path:
        m, _ = to_python_mip(model)
        return _write(m, path)
