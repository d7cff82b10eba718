# commands/common.py
"""Flags compartidos y helpers de I/O para los subcomandos."""
import argparse
import csv
import json
import time
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from core.calibration import scene_params
from core.errors import ArgumentError, ConfigError
from core.materials import MaterialParams
from core.scene import Grid, Scene, load_scene, make_grid
from schemas.config import RunConfig, load_run_config
from schemas.reports import MethodRow, PlanReport
from schemas.scene import BaseStation, Materials

# flag de la CLI -> campo de RunConfig
FLAG_FIELDS = {
    "scene": "scene",
    "measurements": "measurements",
    "out_dir": "out_dir",
    "seed": "seed",
    "grid_res": "grid_res_m",
    "rth_dbm": "rth_dbm",
    "alpha": "alpha_weight",
    "n_new": "n_new",
    "tx_power_dbm": "tx_power_dbm",
    "tx_power_list": "tx_power_list",
    "es_step_m": "es_step_m",
    "rs_groups": "rs_groups",
    "budget_init": "budget_init",
    "budget_bo": "budget_bo",
    "epochs": "epochs",
    "lr": "lr",
    "optimizer": "optimizer",
    "batch_size": "batch_size",
    "init": "init",
}


def add_run_flags(p: argparse.ArgumentParser, *groups: str) -> None:
    """--config/--out-dir/--seed siempre; el resto por grupo."""
    p.add_argument("--config", help="JSON con campos de RunConfig")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--scene")

    if "metrics" in groups:
        p.add_argument("--grid-res", dest="grid_res", type=float)
        p.add_argument("--rth-dbm", dest="rth_dbm", type=float)
        p.add_argument("--alpha", type=float)
    if "deploy" in groups:
        p.add_argument("--n-new", dest="n_new", type=int)
        p.add_argument("--tx-power-dbm", dest="tx_power_dbm", type=float)
        p.add_argument("--es-step-m", dest="es_step_m", type=float)
    if "bo" in groups:
        p.add_argument("--budget-init", dest="budget_init", type=int)
        p.add_argument("--budget-bo", dest="budget_bo", type=int)
    if "baselines" in groups:
        p.add_argument("--rs-groups", dest="rs_groups", type=int)
    if "calibration" in groups:
        p.add_argument("--measurements")
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--optimizer")
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--init", help="auto | labels | scene | random")


def run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        field: getattr(args, flag)
        for flag, field in FLAG_FIELDS.items()
        if hasattr(args, flag)
    }
    return load_run_config(getattr(args, "config", None), overrides)


def require(value: Optional[str], what: str) -> str:
    if not value:
        raise ConfigError(f"falta {what}")
    return value


def prepare(cfg: RunConfig) -> Tuple[Scene, Grid, Path]:
    scene = load_scene(require(cfg.scene, "--scene"))
    grid = make_grid(scene, cfg.grid_res_m)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return scene, grid, out


def parse_float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"lista de números inválida: {text!r}") from exc


# ----------------- Θ -----------------

def load_theta(path: Optional[str], scene: Scene) -> MaterialParams:
    """Θ desde un JSON de materiales; sin archivo => valores de la escena."""
    if not path:
        return scene_params(scene)
    p = Path(path)
    try:
        mats = Materials.model_validate_json(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"no existe el archivo de materiales: {p}") from exc
    except ValidationError as exc:
        raise ConfigError(f"materiales mal formados ({p}): {exc.errors()[0].get('msg')}") from exc
    if len(mats.sigma) != scene.n_materials or len(mats.epsilon) != scene.n_materials:
        raise ArgumentError(f"{p}: se esperaban {scene.n_materials} materiales")
    return MaterialParams(np.array(mats.sigma), np.array(mats.epsilon))


# ----------------- Estaciones -----------------

def load_bs_file(path: str) -> List[BaseStation]:
    """Acepta un PlanReport JSON (usa new_bs) o una lista de estaciones."""
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"no existe el archivo de estaciones: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"estaciones mal formadas ({p}): {exc.msg}") from exc
    try:
        if isinstance(data, dict):
            return list(PlanReport.model_validate(data).new_bs)
        return [BaseStation.model_validate(b) for b in data]
    except ValidationError as exc:
        raise ConfigError(f"estaciones mal formadas ({p}): {exc.errors()[0].get('msg')}") from exc


# ----------------- Escritura -----------------

def write_model(path: Path, model: BaseModel, exclude: Optional[set] = None) -> Path:
    path.write_text(model.model_dump_json(indent=2, exclude=exclude) + "\n", encoding="utf-8")
    return path


def write_rows(path: Path, header: Iterable[str], rows: Iterable[Iterable]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return path


def method_row(report: PlanReport) -> MethodRow:
    m = report.metrics
    return MethodRow(method=report.method, coverage=m.coverage, capacity=m.capacity, target=m.target, queries=report.queries)


def write_table(path: Path, rows: Iterable[MethodRow]) -> Path:
    """Tabla de ancho fijo para leer a ojo; la cobertura va en %."""
    lines = [f"{'método':<12}{'cobertura %':>13}{'capacidad b/s/Hz':>19}{'T':>10}{'consultas':>11}"]
    for r in rows:
        lines.append(f"{r.method:<12}{100.0 * r.coverage:>13.2f}{r.capacity:>19.4f}{r.target:>10.4f}{r.queries:>11d}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


TRACE_COLUMNS = ["n", "query", "candidate", "x", "y", "target", "phase"]


def trace_rows(report: PlanReport):
    """Una fila por evaluación del gemelo: (n, consulta, candidato, x, y, T, fase)."""
    for trace in report.traces:
        for q, e in enumerate(trace.evaluations, start=1):
            yield trace.n, q, e.candidate_index, e.x, e.y, e.target, e.phase


def config_echo(cfg: RunConfig) -> dict:
    return cfg.model_dump(mode="json")


class Stopwatch:
    def __init__(self):
        self.t0 = time.perf_counter()
        self.laps: dict = {}

    def lap(self, name: str) -> float:
        now = time.perf_counter()
        self.laps[name] = now - self.t0
        return self.laps[name]

    def total(self) -> dict:
        self.laps["total_s"] = time.perf_counter() - self.t0
        return self.laps
