# core/radiomap.py
"""
Solver de mapas de radio: mejor RSRP por punto del grid, SNR, y las métricas
C (cobertura), S (capacidad) y T = α·C + S.
"""
import csv
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import numpy as np

from core.errors import ArgumentError
from core.materials import MaterialParams
from core.propagation import EngineConfig, rsrp_field
from core.scene import Grid, Scene
from schemas.reports import Metrics
from schemas.scene import BaseStation

logger = logging.getLogger(__name__)

# rango del heatmap PGM
PGM_MIN_DBM = -120.0
PGM_MAX_DBM = -30.0


@dataclass(frozen=True)
class RadioMap:
    grid: Grid
    best_rsrp: np.ndarray     # (L,) dBm
    snr_linear: np.ndarray    # (L,)
    serving_bs: np.ndarray    # (L,) índice dentro de bs_set
    noise_floor_dbm: float


def snr_from_rsrp(best_rsrp: np.ndarray, noise_floor_dbm: float) -> np.ndarray:
    return 10.0 ** ((best_rsrp - noise_floor_dbm) / 10.0)


def bs_fields(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    bs_set: Sequence[BaseStation],
    grid: Grid,
) -> np.ndarray:
    """RSRP de cada estación en cada punto, (|bs_set|, L)."""
    return np.stack([rsrp_field(scene, config, params, bs, grid.xs, grid.ys, grid.z) for bs in bs_set])


def radiomap_from_fields(grid: Grid, fields: np.ndarray, noise_floor_dbm: float) -> RadioMap:
    # argmax devuelve el primer máximo => empate al menor índice
    serving = np.argmax(fields, axis=0)
    best = fields[serving, np.arange(fields.shape[1])]
    return RadioMap(
        grid=grid,
        best_rsrp=best,
        snr_linear=snr_from_rsrp(best, noise_floor_dbm),
        serving_bs=serving,
        noise_floor_dbm=noise_floor_dbm,
    )


def solve_radiomap(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    bs_set: Sequence[BaseStation],
    grid: Grid,
) -> RadioMap:
    if not bs_set:
        raise ArgumentError("solve_radiomap necesita al menos una estación base")
    fields = bs_fields(scene, config, params, bs_set, grid)
    return radiomap_from_fields(grid, fields, config.noise_floor_dbm)


def coverage(radio_map: RadioMap, rth_dbm: float) -> float:
    """Fracción de puntos con r_ℓ > r_th (estricto)."""
    return float(np.count_nonzero(radio_map.best_rsrp > rth_dbm)) / radio_map.best_rsrp.shape[0]


def capacity(radio_map: RadioMap) -> float:
    """Eficiencia espectral media log2(1 + s_ℓ), bit/s/Hz."""
    return float(np.mean(np.log2(1.0 + radio_map.snr_linear)))


def target(radio_map: RadioMap, alpha_weight: float, rth_dbm: float) -> Metrics:
    if alpha_weight <= 0:
        raise ArgumentError(f"alpha debe ser > 0 (alpha={alpha_weight})")
    c = coverage(radio_map, rth_dbm)
    s = capacity(radio_map)
    return Metrics(coverage=c, capacity=s, target=alpha_weight * c + s, alpha_weight=alpha_weight, rth_dbm=rth_dbm)


# ----------------- Export -----------------

def export_csv(radio_map: RadioMap, path: str | Path) -> None:
    snr_db = radio_map.best_rsrp - radio_map.noise_floor_dbm
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "rsrp_dbm", "snr_db", "serving_bs"])
        for x, y, r, s, b in zip(
            radio_map.grid.xs, radio_map.grid.ys, radio_map.best_rsrp, snr_db, radio_map.serving_bs
        ):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(r)), repr(float(s)), int(b)])


def pgm_levels(best_rsrp: np.ndarray) -> np.ndarray:
    scaled = (best_rsrp - PGM_MIN_DBM) / (PGM_MAX_DBM - PGM_MIN_DBM) * 255.0
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def export_pgm(radio_map: RadioMap, path: str | Path) -> None:
    """
    PGM binario (P5) de 8 bits. Fila superior = y máxima. Si la última fila
    del grid es incompleta, cada píxel toma el punto más cercano de esa fila.
    """
    grid = radio_map.grid
    levels = pgm_levels(radio_map.best_rsrp)
    full = (grid.ny - 1) * grid.nx
    last = full + ((np.arange(grid.nx) + 0.5) * grid.last_row // grid.nx).astype(np.int64)
    img = np.concatenate([levels[:full], levels[last]]).reshape(grid.ny, grid.nx)[::-1]

    header = (
        "P5\n"
        f"# rsrp dBm lineal [{PGM_MIN_DBM:g}, {PGM_MAX_DBM:g}] -> [0, 255], saturado; fila 0 = y max\n"
        f"{grid.nx} {grid.ny}\n255\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(img.tobytes())


# ----------------- Tiempos -----------------

def time_radiomap_solves(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    bs_sets: Sequence[Sequence[BaseStation]],
    grid: Grid,
    repeats: int = 3,
) -> List[float]:
    """
    Tiempo (s) de solve_radiomap para cada conjunto de estaciones.
    Se reporta la mediana de `repeats` corridas, después de una corrida de calentamiento.
    """
    out: List[float] = []
    if bs_sets:
        solve_radiomap(scene, config, params, bs_sets[0], grid)
    for bs_set in bs_sets:
        samples = []
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            solve_radiomap(scene, config, params, bs_set, grid)
            samples.append(time.perf_counter() - t0)
        out.append(float(np.median(samples)))
        logger.info("solve_radiomap con %s BS: %.4f s", len(bs_set), out[-1])
    return out


def linear_trend_ok(times: Sequence[float], tolerance: float = 0.3) -> bool:
    """Crecimiento monótono y como mucho lineal (±tolerance) en cantidad de BS."""
    t = np.asarray(times, dtype=float)
    if t.size < 2:
        return True
    if np.any(np.diff(t) <= 0):
        return False
    n = np.arange(1, t.size + 1)
    return bool(np.all(t <= t[0] * n * (1.0 + tolerance)))
