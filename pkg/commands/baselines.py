# commands/baselines.py
import argparse
import logging

from commands.common import (
    TRACE_COLUMNS,
    Stopwatch,
    add_run_flags,
    config_echo,
    load_theta,
    method_row,
    prepare,
    run_config,
    trace_rows,
    write_model,
    write_rows,
    write_table,
)
from core.manifest import write_manifest
from core.planner import baseline_exhaustive, baseline_random, placement_overlap, plan
from schemas.reports import BaselineSummary

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace) -> int:
    watch = Stopwatch()
    cfg = run_config(args)
    scene, grid, out = prepare(cfg)
    params = load_theta(args.theta, scene)

    common = dict(
        grid=grid,
        alpha_weight=cfg.alpha_weight,
        rth_dbm=cfg.rth_dbm,
        tx_power_dbm=cfg.tx_power_dbm,
        antenna_gain_db=cfg.antenna_gain_db,
    )
    feasible = cfg.feasible()

    auto = plan(
        scene, cfg.engine, params, feasible, cfg.n_new, cfg.budget,
        seed=cfg.seed, step=cfg.es_step_m, xi=cfg.ei_xi, noise=cfg.gp_noise, **common,
    )
    rs = baseline_random(
        scene, cfg.engine, params, feasible, cfg.n_new, cfg.rs_groups, seed=cfg.seed, step=cfg.es_step_m, **common,
    )
    es = baseline_exhaustive(scene, cfg.engine, params, feasible, cfg.n_new, cfg.es_step_m, **common)

    radius = cfg.es_step_m if args.overlap_radius is None else args.overlap_radius
    summary = BaselineSummary(
        rows=[method_row(r) for r in (auto, rs, es)],
        target_ratio=auto.metrics.target / es.metrics.target if es.metrics.target else 0.0,
        query_ratio=auto.queries / es.queries if es.queries else 0.0,
        overlap_radius_m=radius,
        overlap_with_es=placement_overlap(auto.new_bs, es.new_bs, radius),
    )

    outputs = [
        write_model(out / "plan.json", auto, exclude={"wall_time_s"}),
        write_model(out / "random.json", rs, exclude={"wall_time_s"}),
        write_model(out / "exhaustive.json", es, exclude={"wall_time_s"}),
        write_model(out / "baselines.json", summary),
        write_rows(
            out / "baselines.csv",
            ["method", "coverage", "capacity", "target", "queries"],
            ([r.method, r.coverage, r.capacity, r.target, r.queries] for r in summary.rows),
        ),
        write_table(out / "baselines_table.txt", summary.rows),
        write_rows(
            out / "plan_trace.csv",
            TRACE_COLUMNS,
            trace_rows(auto),
        ),
    ]

    for r in summary.rows:
        logger.info("%-10s C=%.4f S=%.4f T=%.4f consultas=%s", r.method, r.coverage, r.capacity, r.target, r.queries)
    es_ratio = es.wall_time_s / auto.wall_time_s if auto.wall_time_s > 0 else 0.0
    logger.info(
        "ES tardó %.1fx lo de AutoPlan; T_plan/T_ES=%.4f; consultas %.1f%%",
        es_ratio, summary.target_ratio, 100.0 * summary.query_ratio,
    )

    timings = watch.total()
    timings.update({
        "autoplan_s": auto.wall_time_s,
        "random_s": rs.wall_time_s,
        "exhaustive_s": es.wall_time_s,
        "es_over_autoplan": es_ratio,
    })
    write_manifest(
        out,
        "baselines",
        config_echo(cfg),
        outputs=outputs,
        inputs=[cfg.scene] + ([args.theta] if args.theta else []),
        seed=cfg.seed,
        arguments={"theta": args.theta, "overlap_radius": radius},
        timings=timings,
        drt_queries={"autoplan": auto.queries, "random": rs.queries, "exhaustive": es.queries},
        metrics=summary.model_dump(),
    )
    return 0


def register(sub) -> None:
    p = sub.add_parser("baselines", help="AutoPlan vs Random Sampling vs Exhaustive Search")
    add_run_flags(p, "metrics", "deploy", "bo", "baselines")
    p.add_argument("--theta")
    p.add_argument("--overlap-radius", dest="overlap_radius", type=float)
    p.set_defaults(handler=run)
