# commands/runs.py
import argparse
import json
import sys

from core.manifest import list_runs


def run(args: argparse.Namespace) -> int:
    runs = list_runs(args.out_dir)
    if not runs:
        print("(sin corridas registradas)")
        return 0

    w = sys.stdout.write
    w(f"{'id':>4}  {'comando':<18} {'seed':>5} {'consultas':>9} {'tiempo_s':>9}  {'fecha':<19}  métricas\n")
    for r in runs:
        metrics = json.loads(r.metrics_json or "{}")
        short = ", ".join(f"{k}={v:.4g}" for k, v in metrics.items() if isinstance(v, (int, float)))
        wall = f"{r.wall_time_s:.2f}" if r.wall_time_s is not None else "-"
        seed = "-" if r.seed is None else r.seed
        w(
            f"{r.id:>4}  {r.command:<18} {seed:>5} {r.drt_queries or 0:>9} {wall:>9}  "
            f"{r.created_at:%Y-%m-%d %H:%M:%S}  {short}\n"
        )
        if args.outputs:
            for o in r.outputs:
                w(f"{'':>6}{o.sha256[:12]}  {o.path}\n")
    return 0


def register(sub) -> None:
    p = sub.add_parser("runs", help="lista el registro de corridas")
    p.add_argument("--out-dir", dest="out_dir", default="out")
    p.add_argument("--outputs", action="store_true", help="muestra también los archivos de cada corrida")
    p.set_defaults(handler=run)
