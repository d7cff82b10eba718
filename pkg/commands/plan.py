# commands/plan.py
import argparse
import logging

from commands.common import (
    TRACE_COLUMNS,
    Stopwatch,
    add_run_flags,
    config_echo,
    load_theta,
    method_row,
    parse_float_list,
    prepare,
    run_config,
    trace_rows,
    write_model,
    write_rows,
    write_table,
)
from core.calibration import initial_params
from core.manifest import write_manifest
from core.planner import plan, twin_gap, tx_power_sweep

logger = logging.getLogger(__name__)


def incumbent_rows(report):
    for trace in report.traces:
        for q, value in enumerate(trace.incumbent_curve, start=1):
            yield trace.n, q, value


def run(args: argparse.Namespace) -> int:
    watch = Stopwatch()
    cfg = run_config(args)
    scene, grid, out = prepare(cfg)
    params = load_theta(args.theta, scene)

    search = dict(
        feasible=cfg.feasible(),
        n_new=cfg.n_new,
        budget=cfg.budget,
        seed=cfg.seed,
        step=cfg.es_step_m,
        xi=cfg.ei_xi,
        antenna_gain_db=cfg.antenna_gain_db,
        noise=cfg.gp_noise,
    )
    metric = dict(grid=grid, alpha_weight=cfg.alpha_weight, rth_dbm=cfg.rth_dbm)
    report = plan(scene, cfg.engine, params, tx_power_dbm=cfg.tx_power_dbm, **metric, **search)
    watch.lap("plan_s")
    queries = {"plan": report.queries}

    outputs = [
        write_model(out / "plan.json", report, exclude={"wall_time_s"}),
        write_rows(out / "plan_incumbent.csv", ["n", "query", "incumbent_target"], incumbent_rows(report)),
        write_rows(
            out / "plan_trace.csv",
            TRACE_COLUMNS,
            trace_rows(report),
        ),
        write_table(out / "plan_table.txt", [method_row(report)]),
    ]
    m = report.metrics
    logger.info(
        "plan: %s estaciones, C=%.4f S=%.4f T=%.4f, %s consultas",
        len(report.new_bs), m.coverage, m.capacity, m.target, report.queries,
    )

    if cfg.tx_power_list:
        rows = tx_power_sweep(
            cfg.tx_power_list, scene=scene, config=cfg.engine, params=params, **metric, **search
        )
        outputs.append(write_rows(
            out / "tx_power_sweep.csv",
            ["tx_power_dbm", "n_new", "coverage", "capacity", "target"],
            ([r["tx_power_dbm"], r["n_new"], r["coverage"], r["capacity"], r["target"]] for r in rows),
        ))
        watch.lap("sweep_s")

    if args.twin_gap:
        uncal = load_theta(args.theta_uncal, scene) if args.theta_uncal else initial_params(scene, cfg.init, cfg.seed)
        gap = twin_gap(
            scene,
            cfg.engine,
            calibrated=params,
            uncalibrated=uncal,
            calibrated_report=report,
            tx_power_dbm=cfg.tx_power_dbm,
            **metric,
            **search,
        )
        outputs.append(write_model(out / "twin_gap.json", gap))
        logger.info("twin gap: %.4f (%.2f%%)", gap.target_gap, gap.target_gap_pct)
        watch.lap("twin_gap_s")

    inputs = [cfg.scene] + [p for p in (args.theta, args.theta_uncal) if p]
    write_manifest(
        out,
        "plan",
        config_echo(cfg),
        outputs=outputs,
        inputs=inputs,
        seed=cfg.seed,
        arguments={"theta": args.theta, "theta_uncal": args.theta_uncal, "twin_gap": args.twin_gap},
        timings=watch.total(),
        drt_queries=queries,
        metrics=m.model_dump(),
    )
    return 0


def register(sub) -> None:
    p = sub.add_parser("plan", help="etapa 2: AutoPlan (BO incremental)")
    add_run_flags(p, "metrics", "deploy", "bo")
    p.add_argument("--theta", help="JSON de materiales calibrados (theta_star.json)")
    p.add_argument("--tx-power-list", dest="tx_power_list", type=parse_float_list, help="ej: 20,30,43")
    p.add_argument("--twin-gap", dest="twin_gap", action="store_true", help="compara contra el gemelo sin calibrar")
    p.add_argument("--theta-uncal", dest="theta_uncal", help="Θ sin calibrar (default: según --init)")
    p.add_argument("--init", help="auto | labels | scene | random (Θ sin calibrar)")
    p.set_defaults(handler=run)
