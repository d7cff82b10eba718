# main.py
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from commands import baselines, bench_map, calibrate, export_map, gen_scene, plan, runs, synth_measurements
from core.errors import AutoPlanError
from core.settings import settings

logger = logging.getLogger("autoplan")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autoplan",
        description="AutoPlan: calibración del gemelo de radio + despliegue de estaciones base con BO",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v INFO, -vv DEBUG")

    sub = parser.add_subparsers(dest="command", required=True)
    # Subcomandos
    gen_scene.register(sub)
    synth_measurements.register(sub)
    calibrate.register(sub)
    plan.register(sub)
    baselines.register(sub)
    export_map.register(sub)
    bench_map.register(sub)
    runs.register(sub)
    return parser


def _setup_logging(verbose: int) -> None:
    level = settings.LOG_LEVEL.upper()
    if verbose == 1:
        level = "INFO"
    elif verbose >= 2:
        level = "DEBUG"
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    # ✅ Errores del pipeline => una línea en stderr + su código de salida
    try:
        return args.handler(args)
    except AutoPlanError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(p) for p in err.get("loc", ())) or "config"
        print(f"error: config inválida: {loc}: {err.get('msg')}", file=sys.stderr)
        return 2
    # ✅ Errores inesperados: traza al log, línea corta al usuario
    except Exception:
        logger.exception("error inesperado")
        print("error: error interno", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
