# commands/synth_measurements.py
import argparse
import logging
from pathlib import Path

from commands.common import Stopwatch, add_run_flags, config_echo, load_theta, prepare, require, run_config
from core.calibration import save_measurements, synthesize_measurements
from core.manifest import write_manifest

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace) -> int:
    watch = Stopwatch()
    cfg = run_config(args)
    scene, _, out_dir = prepare(cfg)
    params = load_theta(args.theta, scene)

    ms = synthesize_measurements(scene, cfg.engine, params, args.n_points, args.noise_sigma, cfg.seed)
    out = Path(require(args.out, "--out"))
    out.parent.mkdir(parents=True, exist_ok=True)
    save_measurements(ms, out)
    logger.info("synth-measurements: %s puntos (ruido %.2f dB) -> %s", len(ms), args.noise_sigma, out)

    inputs = [cfg.scene] + ([args.theta] if args.theta else [])
    write_manifest(
        out_dir,
        "synth-measurements",
        config_echo(cfg),
        outputs=[out],
        inputs=inputs,
        seed=cfg.seed,
        arguments={"theta": args.theta, "n_points": args.n_points, "noise_sigma": args.noise_sigma},
        timings=watch.total(),
    )
    return 0


def register(sub) -> None:
    p = sub.add_parser("synth-measurements", help="mediciones RSRP sintéticas (reemplaza el drive test)")
    add = p.add_argument
    add("--theta", help="JSON de materiales 'verdaderos' (default: los de la escena)")
    add("--n-points", dest="n_points", type=int, default=1494)
    add("--noise-sigma", dest="noise_sigma", type=float, default=0.0)
    add("--out", required=True)
    add_run_flags(p)
    p.set_defaults(handler=run)
