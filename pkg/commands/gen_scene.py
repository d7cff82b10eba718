# commands/gen_scene.py
"""gen-scene: escena sintética con edificios rectangulares que no se tocan."""
import argparse
import logging
from pathlib import Path
from typing import List

import numpy as np
from shapely.geometry import Point, box

from commands.common import Stopwatch, require
from core.errors import ArgumentError, GenerationError
from core.manifest import write_manifest
from core.materials import known_labels
from core.scene import build_scene, save_scene
from core.settings import settings

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 10_000
HEIGHT_RANGE = (5.0, 30.0)
SIDE_RANGE = (12.0, 40.0)
# subcaja "realista" dentro de los límites de calibración
SIGMA_RANGE = (0.01, 0.25)
EPSILON_RANGE = (2.0, 5.5)
EXISTING_BS_HEIGHT = 25.0


def _r(v: float) -> float:
    # 2 decimales => archivo estable y legible
    return round(float(v), 2)


def generate_scene(
    width: float,
    height: float,
    n_buildings: int,
    seed: int,
    n_materials: int = 0,
    labels: bool = True,
) -> dict:
    """
    Devuelve el dict de la escena. K = n_materials (0 => un material por
    edificio). Rechaza footprints que intersectan (incluido tocarse).
    """
    if n_buildings < 0:
        raise ArgumentError(f"n_buildings debe ser >= 0 ({n_buildings})")
    if width <= 0 or height <= 0:
        raise ArgumentError(f"tamaño inválido ({width} x {height})")

    rng = np.random.default_rng(seed)
    k = n_materials if n_materials > 0 else max(1, n_buildings)

    placed = []
    buildings: List[dict] = []
    attempts = 0
    while len(buildings) < n_buildings:
        attempts += 1
        if attempts > MAX_ATTEMPTS:
            raise GenerationError(
                f"no se pudieron ubicar {n_buildings} edificios en {width}x{height} m "
                f"tras {MAX_ATTEMPTS} intentos ({len(buildings)} ubicados)"
            )
        w = _r(rng.uniform(*SIDE_RANGE))
        h = _r(rng.uniform(*SIDE_RANGE))
        if w >= width or h >= height:
            continue
        x0 = _r(rng.uniform(0.0, width - w))
        y0 = _r(rng.uniform(0.0, height - h))
        fp = box(x0, y0, x0 + w, y0 + h)
        if any(fp.intersects(other) for other in placed):
            continue
        placed.append(fp)
        buildings.append({
            "footprint": [[x0, y0], [_r(x0 + w), y0], [_r(x0 + w), _r(y0 + h)], [x0, _r(y0 + h)]],
            "height_m": _r(rng.uniform(*HEIGHT_RANGE)),
            "material_index": len(buildings) % k,
        })

    materials = {
        "sigma": [round(float(v), 4) for v in rng.uniform(*SIGMA_RANGE, size=k)],
        "epsilon": [round(float(v), 4) for v in rng.uniform(*EPSILON_RANGE, size=k)],
    }
    if labels:
        names = known_labels()
        materials["labels"] = [names[int(i)] for i in rng.integers(0, len(names), size=k)]

    # una estación existente, fuera de los edificios
    for _ in range(MAX_ATTEMPTS):
        bx, by = _r(rng.uniform(0.0, width)), _r(rng.uniform(0.0, height))
        if not any(fp.covers(Point(bx, by)) for fp in placed):
            break
    else:
        raise GenerationError("no se pudo ubicar la estación existente fuera de los edificios")

    return {
        "region": {"xmin": 0.0, "ymin": 0.0, "xmax": float(width), "ymax": float(height)},
        "carrier_freq_hz": settings.CARRIER_FREQ_HZ,
        "rx_height_m": settings.RX_HEIGHT_M,
        "buildings": buildings,
        "existing_bs": [{
            "x": bx,
            "y": by,
            "z": EXISTING_BS_HEIGHT,
            "tx_power_dbm": settings.TX_POWER_DBM,
            "antenna_gain_db": settings.ANTENNA_GAIN_DB,
        }],
        "materials": materials,
    }


def run(args: argparse.Namespace) -> int:
    watch = Stopwatch()
    out = Path(require(args.out, "--out"))
    out.parent.mkdir(parents=True, exist_ok=True)
    seed = settings.SEED if args.seed is None else args.seed

    data = generate_scene(args.size[0], args.size[-1], args.n_buildings, seed, args.n_materials, not args.no_labels)
    scene = build_scene(data)
    save_scene(scene, out)
    logger.info("gen-scene: %s edificios -> %s", len(scene.buildings), out)

    write_manifest(
        out.parent,
        "gen-scene",
        config={},
        outputs=[out],
        seed=seed,
        arguments={
            "size": list(args.size),
            "n_buildings": args.n_buildings,
            "n_materials": args.n_materials,
            "labels": not args.no_labels,
        },
        timings=watch.total(),
    )
    return 0


def register(sub) -> None:
    p = sub.add_parser("gen-scene", help="genera una escena sintética")
    p.add_argument("--size", type=float, nargs="+", default=[300.0], metavar="M", help="ancho [alto] en metros")
    p.add_argument("--n-buildings", dest="n_buildings", type=int, default=10)
    p.add_argument("--n-materials", dest="n_materials", type=int, default=0, help="0 => uno por edificio")
    p.add_argument("--no-labels", dest="no_labels", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=run)
