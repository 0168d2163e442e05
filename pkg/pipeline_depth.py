#!/usr/bin/env python3
"""
Оптимальная глубина ограниченного конвейера - командная строка.

Команды:
    time      - время обработки n элементов при заданной глубине
    depth     - оптимальное число ступеней
    table     - таблица занятости ступеней по тактам
    foata     - высота нормальной формы Фоаты трассы конвейера
    simulate  - моделирование (virtual / wallclock / montecarlo) и сравнение с формулой
    sweep     - серия по глубинам, сохранение в CSV / JSON / SVG
"""

import argparse
import json
import logging
import os
import sys

# Добавляем src в путь для импорта модулей
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

import config
from foata import foata_normal_form, format_form, height, pipeline_trace
from hazardsim import monte_carlo_mean, restart_distribution, simplified_distribution
from model import (
    PipelineConfig,
    PreconditionError,
    RestartModel,
    Workload,
    bounded_time,
    classify_case,
    cycle_time,
    hyperbola_minima,
    optimal_depth_exact,
    optimal_depth_restart,
    optimal_depth_simplified,
    restart_time,
    simplified_error_bound,
    simplified_time,
)
from pipesim import MODES, SimulationError, empirical_depth_sweep, run_virtual, run_wallclock, timeline_to_csv
from schedule import build_table, concurrency_fractions, render_table
from sweep import CSV_FIELDS, MODELS, OUTPUT_FORMATS, model_sweep, save_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ARGUMENTS = 2
EXIT_PRECONDITION = 3
EXIT_SIMULATION = 4


def configure_logging(verbose: bool = False):
    # stdout остается для отчетов и --json, журнал идет в stderr и, при необходимости, в файл
    handlers = [logging.StreamHandler(sys.stderr)]
    if config.LOG_FILE:
        handlers.append(logging.FileHandler(config.LOG_FILE, encoding="utf-8"))

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


def parse_depth_range(text: str):
    """'A:B' или 'A-B' -> range(A, B + 1)"""
    for separator in (":", "-"):
        if separator in text:
            start, _, stop = text.partition(separator)
            break
    else:
        start = stop = text

    try:
        first, last = int(start), int(stop)
    except ValueError:
        raise argparse.ArgumentTypeError(f"Неверный диапазон глубин: {text!r} (ожидается A:B)")
    if first < 1 or last < first:
        raise argparse.ArgumentTypeError(f"Пустой или некорректный диапазон глубин: {text!r}")
    return range(first, last + 1)


def _delays(args):
    if args.unit_cycle:
        return 0.0, 1.0
    return args.tp, args.to


def _restart(args):
    return RestartModel(args.b) if args.b is not None else None


def _emit_json(payload):
    print(json.dumps(payload, ensure_ascii=False, indent=2))


def cmd_time(args) -> int:
    t_p, t_o = _delays(args)
    cfg = PipelineConfig(args.p, args.q, t_p, t_o)
    w = Workload(args.n)
    r = _restart(args)

    report = {
        "p": cfg.p, "q": cfg.q, "n": w.n, "t_p": t_p, "t_o": t_o, "h": cycle_time(cfg),
        "bounded_time": bounded_time(cfg, w),
        "simplified_time": simplified_time(cfg, w),
        "gap_bound": simplified_error_bound(cfg),
    }
    if r is not None:
        report["b"] = r.b
        report["restart_time"] = restart_time(cfg, w, r)

    if args.simplified:
        report["time"] = report["simplified_time"]
    elif r is not None:
        report["time"] = report["restart_time"]
    else:
        report["time"] = report["bounded_time"]

    if args.json:
        _emit_json(report)
        return EXIT_OK

    print(f"⚙️ p = {cfg.p}, q = {cfg.q}, n = {w.n}, h = {report['h']:g}")
    print(f"⏱️ Время: {report['time']:g}")
    print(f"   точная модель:      {report['bounded_time']:g}")
    print(f"   упрощенная модель:  {report['simplified_time']:g} (расхождение не больше {report['gap_bound']:g})")
    if r is not None:
        print(f"   с рестартами b={r.b:g}: {report['restart_time']:g}")
    return EXIT_OK


def cmd_depth(args) -> int:
    t_p, t_o = _delays(args)
    w = Workload(args.n)
    r = _restart(args)
    model = args.model or ("restart" if r is not None else "exact")

    if model == "exact":
        recommendation = optimal_depth_exact(args.q, w, t_p, t_o)
    elif model == "simplified":
        recommendation = optimal_depth_simplified(args.q, w, t_p, t_o)
    else:
        if r is None:
            raise ValueError("Для модели restart нужен параметр --b")
        recommendation = optimal_depth_restart(args.q, w, t_p, t_o, r)

    report = {
        "model": recommendation.model,
        "q": args.q, "n": w.n, "t_p": t_p, "t_o": t_o,
        "real_optimum": recommendation.real_optimum,
        "integer_optimum": recommendation.integer_optimum,
        "predicted_time": recommendation.predicted_time,
    }
    if model == "exact":
        report["case"] = classify_case(args.q, w, t_p, t_o)

    if args.json:
        _emit_json(report)
        return EXIT_OK

    print(f"🎯 Оптимальная глубина ({recommendation.model}): {recommendation.integer_optimum}")
    print(f"   вещественный оптимум: {recommendation.real_optimum:.4f}")
    print(f"   время при оптимуме:   {recommendation.predicted_time:.4f}")
    if "case" in report:
        print(f"   случай: {report['case']}")
    return EXIT_OK


def cmd_table(args) -> int:
    table = build_table(args.p, args.q, args.n)
    profile = concurrency_fractions(table)

    if args.json:
        _emit_json({
            "p": args.p, "q": args.q, "n": args.n,
            "cycles": table.cycles,
            "grid": table.grid.tolist(),
            "fractions": profile.labels(),
        })
        return EXIT_OK

    print(render_table(table, args.format), end="")
    if args.format == "text":
        print(f"📊 Тактов: {table.cycles}; g = " + ", ".join(profile.labels()))
    else:
        logger.info(f"Доли g_i: {', '.join(profile.labels())}")
    return EXIT_OK


def cmd_foata(args) -> int:
    form = foata_normal_form(pipeline_trace(args.p, args.n), args.q)

    if args.json:
        payload = {"p": args.p, "q": args.q, "n": args.n, "height": height(form)}
        if args.blocks:
            payload["blocks"] = [[[op.element, op.stage] for op in block] for block in form.blocks]
        _emit_json(payload)
        return EXIT_OK

    print(f"🧩 Высота нормальной формы: {height(form)}")
    if args.blocks:
        print(format_form(form), end="")
    return EXIT_OK


def _save_timeline(run) -> str:
    output_dir = config.DATA_PATHS["timelines"]
    os.makedirs(output_dir, exist_ok=True)
    cfg = run.config
    path = os.path.join(output_dir, f"timeline_p{cfg.p}_q{cfg.q}_n{run.n}_{run.mode}.csv")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(timeline_to_csv(run))
    logger.info(f"Временная диаграмма сохранена: {path}")
    return path


def cmd_simulate(args) -> int:
    t_p, t_o = _delays(args)
    cfg = PipelineConfig(args.p, args.q, t_p, t_o)
    w = Workload(args.n)
    r = _restart(args)
    report = {"mode": args.mode, "p": cfg.p, "q": cfg.q, "n": w.n, "h": cycle_time(cfg)}

    if args.mode == "montecarlo":
        if r is None:
            distribution = simplified_distribution(cfg.p, cfg.q)
            report["model_time"] = simplified_time(cfg, w)
        else:
            distribution = restart_distribution(cfg.p, cfg.q, r)
            report["model_time"] = restart_time(cfg, w, r)
            report["b"] = r.b
        stats = monte_carlo_mean(cfg.p, distribution, w.n, args.trials, args.seed, progress=True)
        report.update({
            "measured_time": stats.mean * cycle_time(cfg),
            "stderr": stats.stderr * cycle_time(cfg),
            "trials": stats.trials,
            "seed": args.seed,
        })
    else:
        if args.mode == "virtual":
            run = run_virtual(cfg, w.n)
        else:
            run = run_wallclock(cfg, w.n, scale=args.scale)
        if not run.ok:
            raise SimulationError(run.diagnostic)
        report["model_time"] = bounded_time(cfg, w)
        report["measured_time"] = run.total_time
        report["exit_order_fifo"] = run.exit_order == list(range(1, w.n + 1))
        if args.timeline:
            report["timeline"] = _save_timeline(run)

    report["difference"] = report["measured_time"] - report["model_time"]

    if args.json:
        _emit_json(report)
        return EXIT_OK

    print(f"🔬 Моделирование ({args.mode}): p = {cfg.p}, q = {cfg.q}, n = {w.n}")
    measured = f"   измерено: {report['measured_time']:g}"
    if "stderr" in report:
        measured += f" ± {report['stderr']:.4f} ({report['trials']} прогонов)"
    print(measured)
    print(f"   модель:   {report['model_time']:g}")
    print(f"   разница:  {report['difference']:g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    t_p, t_o = _delays(args)
    w = Workload(args.n)
    r = _restart(args)

    if args.simulate:
        result = empirical_depth_sweep(args.q, w.n, t_p, t_o, args.p_range, mode=args.simulate, r=r,
                                       trials=args.trials, seed=args.seed, scale=args.scale, progress=True)
    else:
        model = args.model or ("restart" if r is not None else "exact")
        result = model_sweep(args.q, w, t_p, t_o, args.p_range, model=model, r=r)

    summary = {"model_argmin": result.model_argmin(), "simulated_argmin": result.simulated_argmin()}
    if t_o > 0:
        p0, p1 = hyperbola_minima(args.q, w, t_p, t_o)
        summary.update({"case": classify_case(args.q, w, t_p, t_o), "p0": p0, "p1": p1})

    paths = []
    if args.out:
        stem = f"sweep_q{args.q}_n{w.n}_p{args.p_range.start}-{args.p_range.stop - 1}"
        paths = save_sweep(result, args.output_dir, stem, args.out)

    if args.json:
        _emit_json({**result.to_dict(), "summary": summary, "files": paths})
        return EXIT_OK

    if not args.out:
        print(",".join(CSV_FIELDS))
        for row in result.rows:
            simulated = "" if row.simulated_time is None else f"{row.simulated_time:g}"
            print(f"{row.depth},{row.model_time:g},{simulated},{row.label}")

    print(f"📈 Минимум по модели: p = {summary['model_argmin']}")
    if summary["simulated_argmin"] is not None:
        print(f"   минимум по моделированию: p = {summary['simulated_argmin']}")
    if "case" in summary:
        print(f"   случай {summary['case']}: p0 = {summary['p0']:.3f}, p1 = {summary['p1']:.3f}")
    for path in paths:
        print(f"💾 {path}")
    return EXIT_OK


def _add_workload(parser, depth: bool = True):
    if depth:
        parser.add_argument("-p", "--p", dest="p", type=int, required=True, help="число ступеней")
    parser.add_argument("-q", "--q", dest="q", type=int, required=True, help="максимум одновременно активных ступеней")
    parser.add_argument("-n", "--n", dest="n", type=int, required=True, help="число входных элементов")


def _add_delays(parser):
    parser.add_argument("--tp", type=float, default=0.0, help="суммарная задержка обработки t_p")
    parser.add_argument("--to", type=float, default=1.0, help="задержка защелки t_o")
    parser.add_argument("--unit-cycle", action="store_true", help="t_p = 0, t_o = 1: время в циклах")
    parser.add_argument("--b", type=float, default=None, help="вероятность рестарта")


def _add_simulation(parser):
    parser.add_argument("--trials", type=int, default=config.MONTE_CARLO_TRIALS, help="число прогонов Монте-Карло")
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="зерно генератора")
    parser.add_argument("--scale", type=float, default=config.WALLCLOCK_SCALE,
                        help="секунд реального времени на единицу модельного")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Оптимальная глубина ограниченного конвейера")
    parser.add_argument("-v", "--verbose", action="store_true", help="подробный журнал")
    subparsers = parser.add_subparsers(dest="command", required=True)

    time_parser = subparsers.add_parser("time", help="время обработки")
    _add_workload(time_parser)
    _add_delays(time_parser)
    time_parser.add_argument("--simplified", action="store_true", help="основной результат по упрощенной модели")
    time_parser.set_defaults(handler=cmd_time)

    depth_parser = subparsers.add_parser("depth", help="оптимальная глубина")
    _add_workload(depth_parser, depth=False)
    _add_delays(depth_parser)
    depth_parser.add_argument("--model", choices=MODELS, default=None)
    depth_parser.set_defaults(handler=cmd_depth)

    table_parser = subparsers.add_parser("table", help="таблица занятости")
    _add_workload(table_parser)
    table_parser.add_argument("--format", choices=("text", "csv"), default="text")
    table_parser.set_defaults(handler=cmd_table)

    foata_parser = subparsers.add_parser("foata", help="нормальная форма Фоаты")
    _add_workload(foata_parser)
    foata_parser.add_argument("--blocks", action="store_true", help="вывести блоки")
    foata_parser.set_defaults(handler=cmd_foata)

    simulate_parser = subparsers.add_parser("simulate", help="моделирование")
    _add_workload(simulate_parser)
    _add_delays(simulate_parser)
    _add_simulation(simulate_parser)
    simulate_parser.add_argument("--mode", choices=MODES, default="virtual")
    simulate_parser.add_argument("--timeline", action="store_true",
                                 help=f"сохранить временную диаграмму в {config.DATA_PATHS['timelines']}")
    simulate_parser.set_defaults(handler=cmd_simulate)

    sweep_parser = subparsers.add_parser("sweep", help="серия по глубинам")
    _add_workload(sweep_parser, depth=False)
    _add_delays(sweep_parser)
    _add_simulation(sweep_parser)
    sweep_parser.add_argument("--p-range", type=parse_depth_range, required=True, help="диапазон глубин A:B")
    sweep_parser.add_argument("--model", choices=MODELS, default=None)
    sweep_parser.add_argument("--simulate", choices=MODES, default=None, help="добавить точки моделирования")
    sweep_parser.add_argument("--out", choices=OUTPUT_FORMATS, action="append", default=[], help="формат файла (можно повторять)")
    sweep_parser.add_argument("--output-dir", default=config.DATA_PATHS["sweeps"])
    sweep_parser.set_defaults(handler=cmd_sweep)

    for sub in (time_parser, depth_parser, table_parser, foata_parser, simulate_parser, sweep_parser):
        sub.add_argument("--json", action="store_true", help="машиночитаемый вывод")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_ARGUMENTS

    configure_logging(args.verbose)

    try:
        return args.handler(args)
    except PreconditionError as e:
        logger.error(f"❌ Условия формулы нарушены: {e}")
        return EXIT_PRECONDITION
    except SimulationError as e:
        logger.error(f"❌ Моделирование завершилось с ошибкой: {e}")
        return EXIT_SIMULATION
    except (ValueError, OSError) as e:
        logger.error(f"❌ {e}")
        return EXIT_ARGUMENTS


if __name__ == "__main__":
    sys.exit(main())
