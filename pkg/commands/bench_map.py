# commands/bench_map.py
"""bench-map: tiempo medio de un solve del mapa con 1..n estaciones."""
import argparse
import logging

import numpy as np

from commands.common import Stopwatch, add_run_flags, config_echo, load_theta, prepare, run_config, write_rows
from core.errors import PlanningError
from core.manifest import write_manifest
from core.radiomap import linear_trend_ok, time_radiomap_solves
from core.scene import drop_occupied, enumerate_candidates, rooftop_bs

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace) -> int:
    watch = Stopwatch()
    cfg = run_config(args)
    scene, grid, out = prepare(cfg)
    params = load_theta(args.theta, scene)

    pool = drop_occupied(enumerate_candidates(scene, cfg.feasible(), cfg.es_step_m), scene.existing_bs)
    if len(pool) < args.max_bs:
        raise PlanningError(f"hay {len(pool)} candidatos y el benchmark necesita {args.max_bs}")
    rng = np.random.default_rng(cfg.seed)
    chosen = [pool[int(i)] for i in rng.choice(len(pool), size=args.max_bs, replace=False)]
    stations = [rooftop_bs(c, cfg.tx_power_dbm, cfg.antenna_gain_db) for c in chosen]
    bs_sets = [stations[:n] for n in range(1, args.max_bs + 1)]

    times = time_radiomap_solves(scene, cfg.engine, params, bs_sets, grid, repeats=args.repeats)
    ok = linear_trend_ok(times)
    if not ok:
        logger.warning("bench-map: el tiempo no crece de forma monótona y ~lineal: %s", times)

    # los tiempos no son deterministas => sólo van al CSV del benchmark y al manifest
    path = write_rows(out / "bench_map.csv", ["n_bs", "mean_solve_s"], zip(range(1, args.max_bs + 1), times))
    timings = watch.total()
    timings.update({f"solve_{n}bs_s": t for n, t in enumerate(times, start=1)})
    write_manifest(
        out,
        "bench-map",
        config_echo(cfg),
        outputs=[path],
        inputs=[cfg.scene] + ([args.theta] if args.theta else []),
        seed=cfg.seed,
        arguments={"max_bs": args.max_bs, "repeats": args.repeats},
        timings=timings,
        drt_queries={"bench": len(bs_sets) * args.repeats},
        metrics={"linear_trend_ok": ok},
    )
    return 0


def register(sub) -> None:
    p = sub.add_parser("bench-map", help="tiempo de solve del mapa vs cantidad de estaciones")
    add_run_flags(p, "metrics")
    p.add_argument("--theta")
    p.add_argument("--max-bs", dest="max_bs", type=int, default=5)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--tx-power-dbm", dest="tx_power_dbm", type=float)
    p.add_argument("--es-step-m", dest="es_step_m", type=float)
    p.set_defaults(handler=run)
