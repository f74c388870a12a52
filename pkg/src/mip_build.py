"""
Построение MIP-моделей P-PATH и C-PATH в независимом от решателя виде.

Имена переменных и ограничений несут тег происхождения, например
z(H1,H2), x(r1,H1,H2), path_bound(r1,3).
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from tqdm import tqdm

from . import config
from .choice import ChoiceModel
from .costs import CostTables
from .errors import ModelBuildError, ResourceLimitError
from .model import ArcKey, NetworkInstance, Path, Trip
from .path_enum import PathSets
from .preprocess import PreprocessContext, TripBounds, big_m_for_trip, compute_bounds
from .trip_graph import shuttle_arc_keys

logger = logging.getLogger(__name__)

PathKey = Tuple[Tuple[str, str, str], ...]


class VarKind(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Sense(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "=="


class Formulation(str, Enum):
    PPATH = "ppath"
    CPATH = "cpath"


@dataclass
class Variable:
    name: str
    kind: VarKind
    lb: float = 0.0
    ub: float = 1.0
    priority: int = 0
    start: Optional[float] = None


@dataclass(frozen=True)
class Constraint:
    name: str
    tag: str
    terms: Tuple[Tuple[str, float], ...]
    sense: Sense
    rhs: float

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(coef * values.get(var, 0.0) for var, coef in self.terms)

    def violation(self, values: Mapping[str, float]) -> float:
        lhs = self.activity(values)
        if self.sense == Sense.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == Sense.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class BuildOptions:
    """
    compact_selection: строки lambda <= f и lambda = 1 => g >= g(pi) вместо строк lambda <= x
        по дугам пути, плюс sum lambda <= 1 на поездку; строки lambda <= 1 - x остаются;
    relax_xy_continuous: непрерывные x, y у основных поездок.
    """
    compact_selection: bool = False
    relax_xy_continuous: bool = False
    warm_start: bool = False
    priorities: bool = True


@dataclass
class VariableCatalog:
    z: Dict[ArcKey, str] = field(default_factory=dict)
    x: Dict[str, Dict[ArcKey, str]] = field(default_factory=dict)
    y: Dict[str, Dict[ArcKey, str]] = field(default_factory=dict)
    g: Dict[str, str] = field(default_factory=dict)
    f: Dict[str, Dict[PathKey, str]] = field(default_factory=dict)
    lam: Dict[str, Dict[PathKey, str]] = field(default_factory=dict)
    m: Dict[str, str] = field(default_factory=dict)
    paths: Dict[str, List[Path]] = field(default_factory=dict)

    def counts(self) -> Dict[str, int]:
        return {
            "z": len(self.z),
            "x": sum(len(v) for v in self.x.values()),
            "y": sum(len(v) for v in self.y.values()),
            "g": len(self.g),
            "f": sum(len(v) for v in self.f.values()),
            "lambda": sum(len(v) for v in self.lam.values()),
            "m": len(self.m),
        }


class MipModel:
    """Переменные, линейные ограничения с тегами и линейная цель с постоянным сдвигом."""

    def __init__(self, name: str):
        self.name = name
        self.variables: Dict[str, Variable] = {}
        self.constraints: List[Constraint] = []
        self.objective: Dict[str, float] = {}
        self.offset = 0.0
        self.catalog = VariableCatalog()
        self.context: Optional["ModelContext"] = None

    def add_var(self, name: str, kind: VarKind = VarKind.BINARY, lb: float = 0.0,
                ub: Optional[float] = None, priority: int = 0) -> str:
        if name in self.variables:
            raise ModelBuildError(f"Переменная {name} объявлена дважды")
        if ub is None:
            ub = 1.0 if kind == VarKind.BINARY else float("inf")
        self.variables[name] = Variable(name, kind, lb, ub, priority)
        return name

    def add_row(self, name: str, tag: str,
                terms: Union[Mapping[str, float], Iterable[Tuple[str, float]]],
                sense: Sense, rhs: float) -> Constraint:
        merged: Dict[str, float] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for var, coef in items:
            if var not in self.variables:
                raise ModelBuildError(f"Ограничение {name} ссылается на необъявленную переменную {var}")
            merged[var] = merged.get(var, 0.0) + coef
        row = Constraint(name, tag, tuple((v, c) for v, c in merged.items() if c != 0.0), Sense(sense), rhs)
        self.constraints.append(row)
        return row

    def add_objective(self, var: str, coef: float) -> None:
        if coef != 0.0:
            self.objective[var] = self.objective.get(var, 0.0) + coef

    def size(self) -> Dict[str, int]:
        return {
            "variables": len(self.variables),
            "binaries": sum(1 for v in self.variables.values() if v.kind == VarKind.BINARY),
            "constraints": len(self.constraints),
        }

    def tag_counts(self) -> Dict[str, int]:
        return dict(Counter(row.tag for row in self.constraints))

    def objective_value(self, values: Mapping[str, float]) -> float:
        return self.offset + sum(coef * values.get(var, 0.0) for var, coef in self.objective.items())

    def violated_rows(self, values: Mapping[str, float], tol: float = 1e-6) -> List[Constraint]:
        return [row for row in self.constraints if row.violation(values) > tol]

    def __repr__(self) -> str:
        s = self.size()
        return f"MipModel({self.name}: {s['variables']} vars, {s['constraints']} rows)"


@dataclass
class ModelContext:
    """Всё, что нужно слою решения для расшифровки и проверки решения."""
    tables: CostTables
    trips: List[Trip]
    path_sets: Mapping[str, PathSets]
    preprocess: Optional[PreprocessContext]
    formulation: Formulation
    options: BuildOptions
    choice_model: Optional[ChoiceModel] = None


def _arc_args(arc: ArcKey) -> str:
    return f"{arc[0]},{arc[1]}"


def make_warm_start(instance: NetworkInstance) -> Dict[ArcKey, float]:
    """Стартовый дизайн: открыты только фиксированные дуги."""
    fixed = instance.fixed_arcs
    return {arc: 1.0 if arc in fixed else 0.0 for arc in instance.candidate_arcs}


@dataclass
class _TripLayout:
    hub_arcs: List[ArcKey]
    shuttle_arcs: List[ArcKey]
    nodes: List[str]
    double_shuttle: List[str]


def _trip_layout(tables: CostTables, trip: Trip, ctx: Optional[PreprocessContext]) -> _TripLayout:
    if ctx is not None:
        hub_arcs = ctx.hub_arcs_for(trip.id)
        shuttle_arcs = list(ctx.shuttle_arcs_for(trip.id))
    else:
        hub_arcs = list(tables.instance.candidate_arcs)
        shuttle_arcs = shuttle_arc_keys(tables.instance, trip)
    touched = {v for arc in hub_arcs + shuttle_arcs for v in arc}
    nodes = sorted(touched)
    shuttles = set(shuttle_arcs)
    double = [h for h in sorted(tables.instance.hubs)
              if (trip.origin, h) in shuttles and (h, trip.destination) in shuttles]
    return _TripLayout(hub_arcs, shuttle_arcs, nodes, double)


def _routed_trips(trips: Sequence[Trip], ctx: Optional[PreprocessContext]) -> List[Trip]:
    ordered = sorted(trips, key=lambda t: t.id)
    if ctx is None:
        return ordered
    return [t for t in ordered if not ctx.is_removed(t.id)]


def _usable_paths(paths: Sequence[Path], layout: _TripLayout) -> List[Path]:
    hub = set(layout.hub_arcs)
    shuttle = set(layout.shuttle_arcs)
    return [p for p in paths if p.hub_legs <= hub and p.shuttle_legs <= shuttle]


def _trip_bounds(tables: CostTables, trip: Trip, ctx: Optional[PreprocessContext]) -> TripBounds:
    if ctx is not None:
        return ctx.bounds[trip.id]
    return compute_bounds(tables, trip)


def _add_design(model: MipModel, tables: CostTables, options: BuildOptions) -> None:
    instance = tables.instance
    cat = model.catalog
    priority = 1 if options.priorities else 0
    warm = make_warm_start(instance) if options.warm_start else {}
    for arc in instance.candidate_arcs:
        name = model.add_var(f"z({_arc_args(arc)})", VarKind.BINARY, priority=priority)
        cat.z[arc] = name
        model.add_objective(name, tables.beta[arc])
        if arc in warm:
            model.variables[name].start = warm[arc]
    for arc in sorted(instance.fixed_arcs):
        model.add_row(f"fixed_arc({_arc_args(arc)})", "fixed_arc", {cat.z[arc]: 1.0}, Sense.EQ, 1.0)
    for h in sorted(instance.hubs):
        terms = [(cat.z[a], 1.0) for a in instance.candidate_arcs if a[0] == h]
        terms += [(cat.z[a], -1.0) for a in instance.candidate_arcs if a[1] == h]
        if terms:
            model.add_row(f"weak_connectivity({h})", "weak_connectivity", terms, Sense.EQ, 0.0)


def _add_routing(model: MipModel, tables: CostTables, trip: Trip, layout: _TripLayout,
                 relaxed: bool) -> None:
    cat = model.catalog
    r = trip.id
    kind = VarKind.CONTINUOUS if relaxed else VarKind.BINARY
    xs = {arc: model.add_var(f"x({r},{_arc_args(arc)})", kind, ub=1.0) for arc in layout.hub_arcs}
    ys = {arc: model.add_var(f"y({r},{_arc_args(arc)})", kind, ub=1.0) for arc in layout.shuttle_arcs}
    g = model.add_var(f"g({r})", VarKind.CONTINUOUS)
    cat.x[r], cat.y[r], cat.g[r] = xs, ys, g

    terms = [(g, 1.0)]
    terms += [(var, -tables.tau[arc]) for arc, var in xs.items()]
    terms += [(var, -tables.shuttle_cost(*arc)) for arc, var in ys.items()]
    model.add_row(f"g_definition({r})", "g_definition", terms, Sense.EQ, 0.0)

    flow: Dict[str, List[Tuple[str, float]]] = {v: [] for v in layout.nodes}
    for arc, var in list(xs.items()) + list(ys.items()):
        flow[arc[0]].append((var, 1.0))
        flow[arc[1]].append((var, -1.0))
    for v in layout.nodes:
        rhs = 1.0 if v == trip.origin else -1.0 if v == trip.destination else 0.0
        model.add_row(f"flow({r},{v})", "flow", flow[v], Sense.EQ, rhs)

    for arc, var in xs.items():
        model.add_row(f"x_le_z({r},{_arc_args(arc)})", "x_le_z", {var: 1.0, cat.z[arc]: -1.0}, Sense.LE, 0.0)

    for h in layout.double_shuttle:
        model.add_row(f"no_double_shuttle({r},{h})", "no_double_shuttle",
                      {ys[(trip.origin, h)]: 1.0, ys[(h, trip.destination)]: 1.0}, Sense.LE, 1.0)


def _add_feasibility(model: MipModel, r: str, j: int, path: Path) -> str:
    """f^r_pi = 1 тогда и только тогда, когда все хабовые ноги пути открыты."""
    cat = model.catalog
    f = model.add_var(f"f({r},{j})", VarKind.BINARY)
    hub_legs = sorted(path.hub_legs)
    for arc in hub_legs:
        model.add_row(f"f_le_z({r},{j},{_arc_args(arc)})", "f_le_z", {f: 1.0, cat.z[arc]: -1.0}, Sense.LE, 0.0)
    terms = [(cat.z[arc], 1.0) for arc in hub_legs] + [(f, -1.0)]
    model.add_row(f"path_valid({r},{j})", "path_valid", terms, Sense.LE, len(hub_legs) - 1.0)
    return f


def _check_inputs(tables: CostTables, trips: Sequence[Trip], path_sets: Mapping[str, PathSets],
                  ctx: Optional[PreprocessContext]) -> None:
    for trip in trips:
        if not trip.is_latent:
            continue
        removed = ctx is not None and ctx.is_removed(trip.id)
        sets = path_sets.get(trip.id)
        if sets is None and not removed:
            raise ModelBuildError(f"Нет наборов путей для латентной поездки {trip.id}")
        if sets is not None and sets.removed is not None and not removed:
            raise ModelBuildError(
                f"Поездка {trip.id} удалена при перечислении, но контекст предобработки не передан"
            )
    if ctx is not None and ctx.tables is not tables:
        raise ModelBuildError("Контекст предобработки построен на других таблицах стоимостей")


def build_ppath(tables: CostTables, trips: Sequence[Trip], path_sets: Mapping[str, PathSets],
                ctx: Optional[PreprocessContext] = None,
                options: BuildOptions = BuildOptions(),
                choice_model: Optional[ChoiceModel] = None) -> MipModel:
    """
    Строит P-PATH: маршрутизация x, y, g для всех поездок и переменные f, lambda
    по путям A и RP латентных поездок.

    Returns:
        MipModel с каталогом переменных и контекстом
    """
    _check_inputs(tables, trips, path_sets, ctx)
    model = MipModel("P-PATH")
    cat = model.catalog
    _add_design(model, tables, options)
    phi_bar = tables.phi_bar

    for trip in tqdm(_routed_trips(trips, ctx), desc="P-PATH", disable=not config.SHOW_PROGRESS):
        r = trip.id
        layout = _trip_layout(tables, trip, ctx)
        relaxed = options.relax_xy_continuous and not trip.is_latent and not tables.is_lex
        _add_routing(model, tables, trip, layout, relaxed)
        if not trip.is_latent:
            model.add_objective(cat.g[r], trip.riders)
            continue

        sets = path_sets[r]
        candidates = _usable_paths(sets.candidates, layout)
        adopt_keys = {p.key for p in sets.adopt}
        big_m = big_m_for_trip(_trip_bounds(tables, trip, ctx), candidates)
        xs = cat.x[r]
        cat.paths[r] = candidates
        cat.f[r], cat.lam[r] = {}, {}
        for j, path in enumerate(candidates):
            f = _add_feasibility(model, r, j, path)
            cat.f[r][path.key] = f
            model.add_row(f"path_bound({r},{j})", "path_bound",
                          {cat.g[r]: 1.0, f: big_m}, Sense.LE, path.weighted_cost + big_m)
            if path.key not in adopt_keys:
                continue
            lam = model.add_var(f"lambda({r},{j})", VarKind.BINARY)
            cat.lam[r][path.key] = lam
            model.add_objective(lam, trip.riders * (path.weighted_cost - phi_bar))
            on = sorted(path.hub_legs)
            off = [arc for arc in layout.hub_arcs if arc not in path.hub_legs]
            if options.compact_selection:
                model.add_row(f"select_le_f({r},{j})", "select_le_f", {lam: 1.0, f: -1.0}, Sense.LE, 0.0)
                # lambda = 1 => g >= g(pi); вместе с path_bound g = g(pi)
                model.add_row(f"select_cost({r},{j})", "select_cost",
                              {cat.g[r]: 1.0, lam: -big_m}, Sense.GE, path.weighted_cost - big_m)
            else:
                for arc in on:
                    model.add_row(f"select_on({r},{j},{_arc_args(arc)})", "select_on",
                                  {lam: 1.0, xs[arc]: -1.0}, Sense.LE, 0.0)
            for arc in off:
                model.add_row(f"select_off({r},{j},{_arc_args(arc)})", "select_off",
                              {lam: 1.0, xs[arc]: 1.0}, Sense.LE, 1.0)
            terms = [(xs[arc], 1.0) for arc in on] + [(xs[arc], -1.0) for arc in off] + [(lam, -1.0)]
            model.add_row(f"select_force({r},{j})", "select_force", terms, Sense.LE, len(on) - 1.0)
        if options.compact_selection and cat.lam[r]:
            model.add_row(f"select_at_most_one({r})", "select_at_most_one",
                          {lam: 1.0 for lam in cat.lam[r].values()}, Sense.LE, 1.0)

    model.offset = ctx.offset if ctx is not None else 0.0
    model.context = ModelContext(tables, list(trips), path_sets, ctx, Formulation.PPATH, options, choice_model)
    logger.info(f"Построена модель {model}")
    return model


def _cpath_projection(tables: CostTables, trips: Sequence[Trip], path_sets: Mapping[str, PathSets],
                      ctx: Optional[PreprocessContext]) -> int:
    total = len(tables.instance.candidate_arcs)
    for trip in _routed_trips(trips, ctx):
        if trip.is_latent:
            total += 2 * len(path_sets[trip.id].pi) + 1
        else:
            layout = _trip_layout(tables, trip, ctx)
            total += len(layout.hub_arcs) + len(layout.shuttle_arcs) + 1
    return total


def build_cpath(tables: CostTables, trips: Sequence[Trip], path_sets: Mapping[str, PathSets],
                ctx: Optional[PreprocessContext] = None,
                options: BuildOptions = BuildOptions(),
                max_variables: int = config.CPATH_MAX_VARIABLES,
                choice_model: Optional[ChoiceModel] = None) -> MipModel:
    """
    Строит C-PATH: маршрутизация только основных поездок; для латентных
    выбор одного пути из Pi_red с m^r, равным минимальной стоимости доступного пути.

    Raises:
        ModelBuildError: наборы путей без Pi (PE-DCM)
        ResourceLimitError: прогнозируемый размер модели больше max_variables
    """
    _check_inputs(tables, trips, path_sets, ctx)
    for trip in _routed_trips(trips, ctx):
        if trip.is_latent and path_sets[trip.id].pi is None:
            raise ModelBuildError(
                f"C-PATH требует полного множества путей Pi для поездки {trip.id}; "
                "используйте перечисление PE (--enum pe)"
            )
    projected = _cpath_projection(tables, trips, path_sets, ctx)
    if projected > max_variables:
        raise ResourceLimitError(
            f"C-PATH: прогнозируется {projected} переменных при пределе {max_variables}; используйте P-PATH"
        )

    model = MipModel("C-PATH")
    cat = model.catalog
    _add_design(model, tables, options)
    phi_bar = tables.phi_bar

    for trip in tqdm(_routed_trips(trips, ctx), desc="C-PATH", disable=not config.SHOW_PROGRESS):
        r = trip.id
        layout = _trip_layout(tables, trip, ctx)
        if not trip.is_latent:
            relaxed = options.relax_xy_continuous and not tables.is_lex
            _add_routing(model, tables, trip, layout, relaxed)
            model.add_objective(cat.g[r], trip.riders)
            continue

        sets = path_sets[r]
        paths = _usable_paths(sets.pi, layout)
        adopt_keys = {p.key for p in sets.adopt}
        big_m = big_m_for_trip(_trip_bounds(tables, trip, ctx), paths)
        m = model.add_var(f"m({r})", VarKind.CONTINUOUS)
        cat.m[r] = m
        cat.paths[r] = paths
        cat.f[r], cat.lam[r] = {}, {}
        for j, path in enumerate(paths):
            f = _add_feasibility(model, r, j, path)
            lam = model.add_var(f"lambda({r},{j})", VarKind.BINARY)
            cat.f[r][path.key] = f
            cat.lam[r][path.key] = lam
            model.add_row(f"min_bound({r},{j})", "min_bound", {m: 1.0, f: big_m}, Sense.LE,
                          path.weighted_cost + big_m)
            model.add_row(f"select_le_f({r},{j})", "select_le_f", {lam: 1.0, f: -1.0}, Sense.LE, 0.0)
            model.add_row(f"select_min({r},{j})", "select_min", {m: -1.0, lam: big_m}, Sense.LE,
                          big_m - path.weighted_cost)
            if path.key in adopt_keys:
                model.add_objective(lam, trip.riders * (path.weighted_cost - phi_bar))
        model.add_row(f"select_one({r})", "select_one", [(v, 1.0) for v in cat.lam[r].values()], Sense.EQ, 1.0)

    model.offset = ctx.offset if ctx is not None else 0.0
    model.context = ModelContext(tables, list(trips), path_sets, ctx, Formulation.CPATH, options, choice_model)
    logger.info(f"Построена модель {model}")
    return model


def expected_size(formulation: Formulation, tables: CostTables, trips: Sequence[Trip],
                  path_sets: Mapping[str, PathSets], ctx: Optional[PreprocessContext] = None,
                  options: BuildOptions = BuildOptions()) -> Dict[str, int]:
    """
    Размер модели по замкнутым формулам на сокращённых множествах.

    Дизайн: |Z| переменных, |Z_fixed| + (хабы с дугами) строк.
    Маршрутизация поездки: |X| + |Y| + 1 переменных, 1 + |V| + |X| + (пары двойных шаттлов) строк.
    P-PATH: путь из A даёт 2 переменные и |x(pi)| + 3 + |X| строк (|X| + 5 в компактном варианте
    и ещё одна строка на поездку), путь из RP: 1 переменную и |x(pi)| + 2 строк.
    C-PATH: латентная поездка даёт 2|Pi| + 1 переменных и sum(|x(pi)| + 4) + 1 строк.
    """
    formulation = Formulation(formulation)
    instance = tables.instance
    arcs = instance.candidate_arcs
    hubs_with_arcs = {v for arc in arcs for v in arc}
    variables = binaries = len(arcs)
    constraints = len(instance.fixed_arcs) + len(hubs_with_arcs)
    for trip in _routed_trips(trips, ctx):
        layout = _trip_layout(tables, trip, ctx)
        n_x, n_y = len(layout.hub_arcs), len(layout.shuttle_arcs)
        routed = formulation == Formulation.PPATH or not trip.is_latent
        if routed:
            relaxed = options.relax_xy_continuous and not trip.is_latent and not tables.is_lex
            variables += n_x + n_y + 1
            binaries += 0 if relaxed else n_x + n_y
            constraints += 1 + len(layout.nodes) + n_x + len(layout.double_shuttle)
        if not trip.is_latent:
            continue
        sets = path_sets[trip.id]
        if formulation == Formulation.PPATH:
            adopt_keys = {p.key for p in sets.adopt}
            n_adopt = 0
            for path in _usable_paths(sets.candidates, layout):
                k = len(path.hub_legs)
                if path.key in adopt_keys:
                    n_adopt += 1
                    variables += 2
                    binaries += 2
                    constraints += k + 2 + (n_x - k + 3 if options.compact_selection else n_x + 1)
                else:
                    variables += 1
                    binaries += 1
                    constraints += k + 2
            if options.compact_selection and n_adopt:
                constraints += 1
        else:
            paths = _usable_paths(sets.pi, layout)
            variables += 2 * len(paths) + 1
            binaries += 2 * len(paths)
            constraints += sum(len(p.hub_legs) + 4 for p in paths) + 1
    return {"variables": variables, "binaries": binaries, "constraints": constraints}
