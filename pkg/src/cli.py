"""
Командная строка ODMTS-DA.

Подкоманды: solve, enumerate, preprocess-report, oracle, compare, generate, export-model.
Результат печатается в stdout как JSON; коды выхода: 0: успех, 2: ошибка данных
или аргументов, 3: ограничитель ресурсов, 4: лимит решателя (solve печатает
лучшее найденное решение и тоже завершается с кодом 4).
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__, config
from .backends import SolveLimits, SolverStatus, get_backend
from .errors import InvalidArgumentError, OdmtsError, SolverLimitError
from .generator import GEOMETRIES, GeneratorSpec, generate_instance
from .instance_io import load_instance, save_instance
from .mip_build import BuildOptions, Formulation
from .oracle import FollowerMode
from .path_enum import dump_path_sets
from .pipeline import (
    ENUM_PE, ENUM_PE_DCM, PipelineOptions, build_model, make_tables, prepare, run_compare, run_oracle, run_solve,
)
from .preprocess import PreprocessSteps

logger = logging.getLogger(__name__)

EXIT_FILE_NOT_FOUND = 2


def _steps(value: Optional[str]) -> PreprocessSteps:
    if value is None:
        return PreprocessSteps()
    if value == "all":
        return PreprocessSteps.none()
    return PreprocessSteps.without(v.strip() for v in value.split(",") if v.strip())


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", type=Path, default=None,
                        help="файл экземпляра JSON (по умолчанию встроенный toy_3hub)")
    parser.add_argument("--formulation", choices=[f.value for f in Formulation], default=Formulation.PPATH.value)
    parser.add_argument("--enum", choices=[ENUM_PE, ENUM_PE_DCM], default=None,
                        help="алгоритм перечисления путей (по умолчанию pe-dcm для ppath, pe для cpath)")
    parser.add_argument("--follower", choices=[m.value for m in FollowerMode], default=FollowerMode.GENERALIZED.value)
    parser.add_argument("--no-preprocess", nargs="?", const="all", default=None, metavar="STEP[,STEP]",
                        help="отключить предобработку целиком или перечисленные шаги: "
                             + ", ".join(PreprocessSteps.NAMES))
    parser.add_argument("--lazy", action="store_true", help="ленивые ограничения (только ppath)")
    parser.add_argument("--relax-xy", action="store_true", help="x, y основных поездок непрерывные")
    parser.add_argument("--warm-start", action="store_true", help="стартовое решение из фиксированных дуг")
    parser.add_argument("--compact-selection", action="store_true", help="компактная форма lambda <= f")
    parser.add_argument("--gap", type=float, default=config.DEFAULT_MIP_GAP)
    parser.add_argument("--time-limit", type=float, default=config.DEFAULT_TIME_LIMIT)
    parser.add_argument("--threads", type=int, default=config.DEFAULT_THREADS)
    parser.add_argument("--seed", type=int, default=None, help="seed решателя")
    parser.add_argument("--out-dir", type=Path, default=None)
    parser.add_argument("--export-model", type=Path, default=None, metavar="PATH",
                        help="записать модель в .lp или .mps")
    parser.add_argument("--geojson", action="store_true", help="записать design.geojson")
    parser.add_argument("--solver", default=None, help="MIP-адаптер (по умолчанию из ODMTS_SOLVER)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odmts-da", description="Проектирование ODMTS с учётом принятия пассажирами")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("solve", "решить задачу проектирования"),
        ("enumerate", "перечислить пути латентных поездок"),
        ("preprocess-report", "отчёт о предобработке"),
        ("compare", "сравнить P-PATH, C-PATH, ленивые ограничения и оракул"),
        ("export-model", "построить модель и записать её в файл"),
    ):
        _add_pipeline_flags(sub.add_parser(name, help=help_text))

    oracle = sub.add_parser("oracle", help="точный перебор дизайнов")
    oracle.add_argument("--instance", type=Path, default=None)
    oracle.add_argument("--follower", choices=[m.value for m in FollowerMode], default=FollowerMode.GENERALIZED.value)
    oracle.add_argument("--cross-check", action="store_true", help="сверять argmin с полным перебором путей")

    gen = sub.add_parser("generate", help="сгенерировать синтетический экземпляр")
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--n-stops", type=int, default=12)
    gen.add_argument("--n-hubs", type=int, default=4)
    gen.add_argument("--n-fixed-arcs", type=int, default=2)
    gen.add_argument("--n-candidate-arcs", type=int, default=8)
    gen.add_argument("--n-core", type=int, default=6)
    gen.add_argument("--n-latent", type=int, default=6)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--geometry", choices=GEOMETRIES, default="uniform")
    gen.add_argument("--name", default="")
    return parser


def _options(args: argparse.Namespace) -> PipelineOptions:
    return PipelineOptions(
        formulation=Formulation(args.formulation),
        enum=args.enum,
        follower=FollowerMode(args.follower),
        steps=_steps(args.no_preprocess),
        lazy=args.lazy,
        build=BuildOptions(compact_selection=args.compact_selection, relax_xy_continuous=args.relax_xy,
                           warm_start=args.warm_start),
        limits=SolveLimits(time_limit=args.time_limit, gap=args.gap, threads=args.threads, seed=args.seed),
    )


def _print(payload) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2, default=str))


def _cmd_solve(args) -> Optional[int]:
    loaded = load_instance(args.instance)
    report = run_solve(loaded, _options(args), get_backend(args.solver), args.export_model)
    tables = make_tables(loaded, FollowerMode.GENERALIZED) if args.geojson else None
    written = report.write(args.out_dir, tables=tables, geojson=args.geojson)
    payload = report.to_dict()
    payload["artifacts"] = {k: str(v) for k, v in written.items()}
    _print(payload)
    if SolverStatus(report.solution.status).stopped_by_limit:
        logger.warning(f"Лимит решателя исчерпан, возвращено лучшее найденное решение (gap {report.solution.gap})")
        return SolverLimitError.exit_code
    return None


def _cmd_enumerate(args) -> None:
    loaded = load_instance(args.instance)
    prepared = prepare(loaded, _options(args))
    out_dir = args.out_dir or config.OUTPUT_DIR
    csv_path = dump_path_sets(prepared.path_sets, Path(out_dir) / "path_sets.csv")
    summary = {
        trip_id: {
            "removed": sets.removed.kind.value if sets.removed else None,
            "pi": len(sets.pi) if sets.pi is not None else None,
            "adopt": len(sets.adopt),
            "reject_profitable": len(sets.reject_profitable),
        }
        for trip_id, sets in sorted(prepared.path_sets.items())
    }
    _print({"algorithm": _options(args).enum_algorithm, "trips": summary, "csv": str(csv_path),
            "timings": prepared.timings})


def _cmd_preprocess_report(args) -> None:
    loaded = load_instance(args.instance)
    prepared = prepare(loaded, _options(args))
    report = prepared.preprocess_report()
    out_dir = Path(args.out_dir or config.OUTPUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.to_frame().to_csv(out_dir / "preprocess.csv", index=False)
    payload = report.to_dict()
    payload["removals"] = {
        trip_id: {"kind": r.kind.value, "reason": r.reason}
        for trip_id, r in sorted(prepared.ctx.removals.items())
    }
    _print(payload)


def _cmd_oracle(args) -> None:
    solution = run_oracle(load_instance(args.instance), FollowerMode(args.follower), args.cross_check)
    _print(solution.to_dict())


def _cmd_compare(args) -> None:
    options = _options(args)
    options.limits = SolveLimits.exact(time_limit=args.time_limit, threads=args.threads, seed=args.seed)
    frame, _ = run_compare(load_instance(args.instance), options, get_backend(args.solver))
    out_dir = Path(args.out_dir or config.OUTPUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_dir / "compare.csv", index=False)
    _print({"all_agree": bool(frame["agrees"].all()), "table": frame.to_dict(orient="records")})


def _cmd_generate(args) -> None:
    spec = GeneratorSpec(
        n_stops=args.n_stops, n_hubs=args.n_hubs, n_fixed_arcs=args.n_fixed_arcs,
        n_candidate_arcs=args.n_candidate_arcs, n_core=args.n_core, n_latent=args.n_latent,
        seed=args.seed, geometry=args.geometry, name=args.name,
    )
    instance, trips, params, choice_spec = generate_instance(spec)
    path = save_instance(args.out, instance, trips, params, choice_spec)
    _print({"instance": instance.name, "path": str(path), "stops": len(instance.stops),
            "arcs": len(instance.arcs), "trips": len(trips)})


def _cmd_export_model(args) -> None:
    if args.export_model is None:
        raise InvalidArgumentError("export-model требует --export-model PATH")
    loaded = load_instance(args.instance)
    options = _options(args)
    prepared = prepare(loaded, options)
    model = build_model(prepared, options.formulation, options.build)
    path = get_backend(args.solver).export(model, args.export_model)
    _print({"model": model.name, "path": str(path), **model.size()})


COMMANDS = {
    "solve": _cmd_solve,
    "enumerate": _cmd_enumerate,
    "preprocess-report": _cmd_preprocess_report,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
    "generate": _cmd_generate,
    "export-model": _cmd_export_model,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format=config.LOG_FORMAT)
    try:
        code = COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        logger.error(str(exc))
        return EXIT_FILE_NOT_FOUND
    except OdmtsError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
