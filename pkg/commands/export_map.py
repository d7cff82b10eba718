# commands/export_map.py
"""map: mapa de radio de 𝓑̂ (∪ 𝓑̄ si se pasa --bs-file) en CSV + PGM."""
import argparse
import logging

from commands.common import (
    Stopwatch,
    add_run_flags,
    config_echo,
    load_bs_file,
    load_theta,
    prepare,
    run_config,
    write_model,
)
from core.errors import ArgumentError
from core.manifest import write_manifest
from core.radiomap import export_csv, export_pgm, solve_radiomap, target

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace) -> int:
    watch = Stopwatch()
    cfg = run_config(args)
    scene, grid, out = prepare(cfg)
    params = load_theta(args.theta, scene)

    new_bs = load_bs_file(args.bs_file) if args.bs_file else []
    bs_set = list(scene.existing_bs) + new_bs
    if not bs_set:
        raise ArgumentError("no hay estaciones: la escena no trae existentes y no se pasó --bs-file")

    radio_map = solve_radiomap(scene, cfg.engine, params, bs_set, grid)
    metrics = target(radio_map, cfg.alpha_weight, cfg.rth_dbm)

    prefix = args.prefix
    csv_path = out / f"{prefix}.csv"
    pgm_path = out / f"{prefix}.pgm"
    export_csv(radio_map, csv_path)
    export_pgm(radio_map, pgm_path)
    outputs = [csv_path, pgm_path, write_model(out / f"{prefix}_metrics.json", metrics)]
    logger.info(
        "map: %s BS, %s puntos, C=%.4f S=%.4f T=%.4f",
        len(bs_set), grid.size, metrics.coverage, metrics.capacity, metrics.target,
    )

    inputs = [cfg.scene] + [p for p in (args.theta, args.bs_file) if p]
    write_manifest(
        out,
        "map",
        config_echo(cfg),
        outputs=outputs,
        inputs=inputs,
        arguments={"theta": args.theta, "bs_file": args.bs_file, "prefix": prefix},
        timings=watch.total(),
        drt_queries={"map": 1},
        metrics=metrics.model_dump(),
    )
    return 0


def register(sub) -> None:
    p = sub.add_parser("map", help="exporta el mapa de radio (CSV + PGM)")
    add_run_flags(p, "metrics")
    p.add_argument("--theta")
    p.add_argument("--bs-file", dest="bs_file", help="plan.json o lista de estaciones nuevas")
    p.add_argument("--prefix", default="radiomap")
    p.set_defaults(handler=run)
