"""
Тесты построителей P-PATH и C-PATH: размеры, теги строк и линеаризация.
"""
import itertools

import pytest

from conftest import corpus_instance, corpus_seeds, full_scale_instance
from src.costs import CostTables, apply_lex_transform
from src.errors import ModelBuildError, ResourceLimitError
from src.mip_build import (
    BuildOptions,
    Formulation,
    build_cpath,
    build_ppath,
    expected_size,
    make_warm_start,
)
from src.path_enum import enumerate_pe, enumerate_pe_dcm
from src.preprocess import PreprocessSteps, run_preprocessing


def _prepared(loaded, tables=None, steps=PreprocessSteps(), dcm=False):
    tables = tables or CostTables.build(loaded.instance, loaded.params)
    ctx = run_preprocessing(tables, loaded.trips, loaded.choice_model, steps)
    if dcm:
        sets, _ = enumerate_pe_dcm(tables, loaded.trips, ctx=ctx, choice_model=loaded.choice_model)
    else:
        sets = enumerate_pe(tables, loaded.choice_model, loaded.trips, ctx)
    return tables, ctx, sets


def test_toy_ppath_size(toy):
    """Тест: размер P-PATH на игрушечном экземпляре"""
    tables, ctx, sets = _prepared(toy, dcm=True)
    model = build_ppath(tables, toy.trips, sets, ctx)
    assert model.size() == {"variables": 24, "binaries": 22, "constraints": 28}
    assert model.size() == expected_size(Formulation.PPATH, tables, toy.trips, sets, ctx)
    assert model.tag_counts() == {
        "weak_connectivity": 3,
        "g_definition": 2,
        "flow": 8,
        "x_le_z": 2,
        "no_double_shuttle": 4,
        "f_le_z": 1,
        "path_valid": 2,
        "path_bound": 2,
        "select_on": 1,
        "select_off": 1,
        "select_force": 2,
    }
    assert model.catalog.counts()["lambda"] == 2
    assert model.offset == 0.0


def test_toy_compact_selection(toy):
    tables, ctx, sets = _prepared(toy)
    options = BuildOptions(compact_selection=True)
    model = build_ppath(tables, toy.trips, sets, ctx, options)
    full = build_ppath(tables, toy.trips, sets, ctx)
    tags = model.tag_counts()
    assert tags["select_le_f"] == 2
    assert "select_on" not in tags
    assert tags["select_off"] == full.tag_counts()["select_off"] == 1
    assert tags["select_cost"] == 2
    assert tags["select_at_most_one"] == 1
    assert model.size() == expected_size(Formulation.PPATH, tables, toy.trips, sets, ctx, options)


def test_compact_selection_excludes_extra_arcs(toy):
    """λ = 1 несовместимо с маршрутом поездки, который идёт по дуге вне пути."""
    tables, ctx, sets = _prepared(toy, steps=PreprocessSteps.none())
    model = build_ppath(tables, toy.trips, sets, ctx, BuildOptions(compact_selection=True))
    cat = model.catalog
    r = "l1"
    j, path, arc = next((j, p, a) for j, p in enumerate(cat.paths[r]) if p.key in cat.lam[r]
                        for a in sorted(cat.x[r]) if a not in p.hub_legs)
    values = {cat.lam[r][path.key]: 1.0, cat.f[r][path.key]: 1.0, cat.x[r][arc]: 1.0}
    rows = [row.name for row in model.violated_rows(values) if row.tag == "select_off"]
    assert rows == [f"select_off({r},{j},{arc[0]},{arc[1]})"]


def test_compact_selection_counts_one_path(toy):
    """Маршрут по части пути не даёт засчитать сам путь, два пути одновременно не засчитываются."""
    tables, ctx, sets = _prepared(toy, steps=PreprocessSteps.none())
    model = build_ppath(tables, toy.trips, sets, ctx, BuildOptions(compact_selection=True))
    cat = model.catalog
    r = "l1"
    selected = [p for p in cat.paths[r] if p.key in cat.lam[r]]
    assert len(selected) >= 2
    first, second = selected[:2]
    values = {cat.g[r]: first.weighted_cost - 1.0, cat.lam[r][first.key]: 1.0}
    assert [row.tag for row in model.violated_rows(values) if row.name.startswith("select_cost")] == ["select_cost"]
    values = {cat.lam[r][first.key]: 1.0, cat.lam[r][second.key]: 1.0}
    assert any(row.name == f"select_at_most_one({r})" for row in model.violated_rows(values))


def test_toy_cpath_size(toy):
    tables, ctx, sets = _prepared(toy)
    model = build_cpath(tables, toy.trips, sets, ctx)
    assert model.size() == {"variables": 18, "binaries": 16, "constraints": 21}
    assert model.size() == expected_size(Formulation.CPATH, tables, toy.trips, sets, ctx)
    assert model.tag_counts()["select_one"] == 1


def test_cpath_requires_full_path_set(toy):
    tables, ctx, sets = _prepared(toy, dcm=True)
    with pytest.raises(ModelBuildError):
        build_cpath(tables, toy.trips, sets, ctx)


def test_cpath_size_guard(toy):
    tables, ctx, sets = _prepared(toy)
    with pytest.raises(ResourceLimitError):
        build_cpath(tables, toy.trips, sets, ctx, max_variables=5)


def test_inconsistent_inputs(toy):
    tables, ctx, sets = _prepared(toy)
    # l2 удалена при перечислении, без контекста модель строить нельзя
    with pytest.raises(ModelBuildError):
        build_ppath(tables, toy.trips, sets, None)
    with pytest.raises(ModelBuildError):
        build_ppath(tables, toy.trips, {}, ctx)


def test_relax_xy_only_core(toy):
    tables, ctx, sets = _prepared(toy)
    model = build_ppath(tables, toy.trips, sets, ctx, BuildOptions(relax_xy_continuous=True))
    assert model.size()["binaries"] == 22 - 6
    lex = apply_lex_transform(toy.params, toy.instance)
    lex_tables, lex_ctx, lex_sets = _prepared(toy, tables=lex)
    lex_model = build_ppath(lex_tables, toy.trips, lex_sets, lex_ctx, BuildOptions(relax_xy_continuous=True))
    assert lex_model.size()["binaries"] == 22


def test_warm_start(toy):
    assert set(make_warm_start(toy.instance).values()) == {0.0}
    tables, ctx, sets = _prepared(toy)
    model = build_ppath(tables, toy.trips, sets, ctx, BuildOptions(warm_start=True))
    assert all(model.variables[name].start == 0.0 for name in model.catalog.z.values())


def test_pure_design_model():
    """Без латентных поездок модель содержит только дизайн и маршрутизацию."""
    loaded = corpus_instance(0, n_latent=0)
    tables, ctx, sets = _prepared(loaded)
    model = build_ppath(tables, loaded.trips, sets, ctx)
    counts = model.catalog.counts()
    assert counts["f"] == 0 and counts["lambda"] == 0
    assert model.tag_counts()["fixed_arc"] == 2


def _linearization_values(model, r, z_open, x_path):
    """Значения z, x и f, λ по определению для проверки строк."""
    cat = model.catalog
    values = {name: float(arc in z_open) for arc, name in cat.z.items()}
    for arc, name in cat.x[r].items():
        values[name] = float(arc in x_path)
    for path in cat.paths[r]:
        feasible = path.hub_legs <= z_open
        values[cat.f[r][path.key]] = float(feasible)
        if path.key in cat.lam[r]:
            values[cat.lam[r][path.key]] = float(path.hub_legs == x_path)
    return values


@pytest.mark.parametrize("compact", [False, True])
def test_linearization_rows(toy, compact):
    """Для любого дизайна f = Feasible(pi, z) и λ = Selected(pi, x) удовлетворяют строкам, а обратные значения: нет."""
    tables, ctx, sets = _prepared(toy, steps=PreprocessSteps.none())
    model = build_ppath(tables, toy.trips, sets, ctx, BuildOptions(compact_selection=compact))
    r = "l1"
    arcs = tables.instance.candidate_arcs
    tags = {"f_le_z", "path_valid", "select_on", "select_off", "select_force"}
    for k in range(len(arcs) + 1):
        for z_open in map(frozenset, itertools.combinations(arcs, k)):
            for path in model.catalog.paths[r]:
                values = _linearization_values(model, r, z_open, path.hub_legs)
                rows = [row for row in model.violated_rows(values) if row.tag in tags and f"({r}," in row.name]
                assert rows == []
                f = model.catalog.f[r][path.key]
                values[f] = 1.0 - values[f]
                flipped = [row for row in model.violated_rows(values)
                           if row.tag in ("f_le_z", "path_valid") and f"({r}," in row.name]
                assert flipped


@pytest.mark.parametrize("seed", corpus_seeds(limit=20))
@pytest.mark.parametrize("formulation", list(Formulation))
def test_size_matches_formula(seed, formulation):
    loaded = corpus_instance(seed)
    tables, ctx, sets = _prepared(loaded, dcm=formulation == Formulation.PPATH)
    options = BuildOptions(compact_selection=seed % 2 == 1)
    build = build_ppath if formulation == Formulation.PPATH else build_cpath
    model = build(tables, loaded.trips, sets, ctx, options)
    assert model.size() == expected_size(formulation, tables, loaded.trips, sets, ctx, options)


@pytest.mark.parametrize("n_core, n_latent", [(1, 1), (6, 12), (60, 120)])
@pytest.mark.parametrize("formulation", list(Formulation))
@pytest.mark.parametrize("compact", [False, True])
def test_size_formula_across_trip_counts(n_core, n_latent, formulation, compact):
    """Формула размера верна от двух до сотен поездок; модели только строятся."""
    loaded = full_scale_instance(3, n_core=n_core, n_latent=n_latent)
    tables, ctx, sets = _prepared(loaded, dcm=formulation == Formulation.PPATH)
    options = BuildOptions(compact_selection=compact)
    build = build_ppath if formulation == Formulation.PPATH else build_cpath
    model = build(tables, loaded.trips, sets, ctx, options)
    assert model.size() == expected_size(formulation, tables, loaded.trips, sets, ctx, options)
