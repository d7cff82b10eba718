# commands/calibrate.py
import argparse
import logging

import numpy as np

from commands.common import (
    Stopwatch,
    add_run_flags,
    config_echo,
    prepare,
    require,
    run_config,
    write_model,
    write_rows,
)
from core.calibration import calibrate, initial_params, load_measurements
from core.manifest import write_manifest

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace) -> int:
    watch = Stopwatch()
    cfg = run_config(args)
    scene, _, out = prepare(cfg)
    ms = load_measurements(require(cfg.measurements, "--measurements"), scene)

    params0 = initial_params(scene, cfg.init, cfg.seed)
    result = calibrate(
        scene,
        cfg.engine,
        params0,
        ms,
        eta=cfg.lr,
        epochs=cfg.epochs,
        optimizer=cfg.optimizer,
        batch_size=cfg.batch_size or None,
        seed=cfg.seed,
    )
    watch.lap("calibrate_s")
    report = result.report

    outputs = [
        write_model(out / "calibration.json", report),
        write_model(out / "theta_star.json", report.theta_star),
        write_model(out / "theta_init.json", report.theta_init),
        write_rows(out / "loss_curve.csv", ["epoch", "loss_db2"], enumerate(report.loss_curve, start=1)),
    ]
    logger.info(
        "calibrate: pérdida %.4f -> %.4f dB² en %s épocas", report.initial_loss, report.final_loss, report.epochs
    )

    steps = np.asarray(result.step_times)
    timings = watch.total()
    timings["step_mean_s"] = float(steps.mean())
    timings["step_var_s2"] = float(steps.var())
    write_manifest(
        out,
        "calibrate",
        config_echo(cfg),
        outputs=outputs,
        inputs=[cfg.scene, cfg.measurements],
        seed=cfg.seed,
        timings=timings,
        metrics={"initial_loss": report.initial_loss, "final_loss": report.final_loss},
    )
    return 0


def register(sub) -> None:
    p = sub.add_parser("calibrate", help="etapa 1: calibra σ, ε contra RSRP medida")
    add_run_flags(p, "calibration")
    p.set_defaults(handler=run)
