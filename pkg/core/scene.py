# core/scene.py
"""
Modelo del mundo: región, edificios, materiales, estaciones existentes,
grid de evaluación y candidatos de despliegue.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import shapely
from pydantic import ValidationError
from shapely.geometry import Polygon, box
from shapely.ops import unary_union

from core.errors import ArgumentError, PlanningError, SceneParseError, SceneValidationError
from core.geometry import ensure_ccw, polygon_edges
from core.materials import EPSILON_BOUNDS, SIGMA_BOUNDS
from core.settings import settings
from schemas.scene import BaseStation, Building, Materials, Region, SceneFile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SceneEdges:
    """Aristas de todos los footprints, precalculadas para el motor."""

    start: np.ndarray          # (E, 2)
    end: np.ndarray            # (E, 2)
    building: np.ndarray       # (E,) índice de edificio
    heights: np.ndarray        # (n_buildings,)
    material_of: np.ndarray    # (n_buildings,) índice de material


@dataclass(frozen=True)
class Scene:
    region: Region
    buildings: Tuple[Building, ...]
    existing_bs: Tuple[BaseStation, ...]
    rx_height: float
    carrier_freq: float
    materials: Materials

    @property
    def n_materials(self) -> int:
        return len(self.materials.sigma)

    @property
    def n_existing(self) -> int:
        return len(self.existing_bs)

    @cached_property
    def edges(self) -> SceneEdges:
        starts, ends, owner = [], [], []
        for i, b in enumerate(self.buildings):
            s, e = polygon_edges(b.footprint)
            starts.append(s)
            ends.append(e)
            owner.append(np.full(len(s), i, dtype=np.int64))

        if starts:
            start = np.concatenate(starts)
            end = np.concatenate(ends)
            building = np.concatenate(owner)
        else:
            start = np.zeros((0, 2))
            end = np.zeros((0, 2))
            building = np.zeros(0, dtype=np.int64)

        return SceneEdges(
            start=start,
            end=end,
            building=building,
            heights=np.array([b.height_m for b in self.buildings], dtype=float),
            material_of=np.array([b.material_index for b in self.buildings], dtype=np.int64),
        )

    def to_file(self) -> SceneFile:
        return SceneFile(
            region=self.region,
            carrier_freq_hz=self.carrier_freq,
            rx_height_m=self.rx_height,
            buildings=self.buildings,
            existing_bs=self.existing_bs,
            materials=self.materials,
        )


@dataclass(frozen=True)
class Grid:
    """
    Grid de evaluación. L = ⌈|A|/a²⌉ centros de celda en orden row-major
    (filas por y creciente). Con nx = ⌈ancho/a⌉ columnas y ny = ⌈L/nx⌉ filas;
    si L no es múltiplo de nx la última fila tiene menos puntos, repartidos
    a lo ancho de toda la región.
    """

    a: float
    nx: int
    ny: int
    dx: float
    dy: float
    xs: np.ndarray
    ys: np.ndarray
    z: float

    @property
    def size(self) -> int:
        return int(self.xs.shape[0])

    @property
    def last_row(self) -> int:
        return self.size - (self.ny - 1) * self.nx


@dataclass(frozen=True)
class FeasibleRegion:
    """ℱ: unión de azoteas (opcional) más polígonos explícitos."""

    rooftops: bool = True
    polygons: Tuple[Tuple[Tuple[float, float], ...], ...] = ()
    mount_offset: float = field(default_factory=lambda: settings.MOUNT_OFFSET_M)
    mast_height: float = field(default_factory=lambda: settings.MAST_HEIGHT_M)


@dataclass(frozen=True)
class Candidate:
    x: float
    y: float
    z: float
    building_index: int   # -1 si viene de un polígono explícito


# ----------------- Validación -----------------

def _validate(raw: SceneFile) -> Scene:
    region_box = box(raw.region.xmin, raw.region.ymin, raw.region.xmax, raw.region.ymax)

    mats = raw.materials
    k = len(mats.sigma)
    if len(mats.epsilon) != k:
        raise SceneValidationError(
            f"materiales: sigma tiene {k} valores y epsilon {len(mats.epsilon)}"
        )
    if mats.labels is not None and len(mats.labels) != k:
        raise SceneValidationError(f"materiales: se esperaban {k} etiquetas, hay {len(mats.labels)}")
    for j, (s, e) in enumerate(zip(mats.sigma, mats.epsilon)):
        if not (SIGMA_BOUNDS[0] < s < SIGMA_BOUNDS[1]) or not (EPSILON_BOUNDS[0] < e < EPSILON_BOUNDS[1]):
            raise SceneValidationError(
                f"material {j}: (sigma={s}, epsilon={e}) fuera de (0, 2) x (1, 6)"
            )

    buildings: List[Building] = []
    for i, b in enumerate(raw.buildings):
        if len(b.footprint) < 3:
            raise SceneValidationError(f"edificio {i}: footprint con menos de 3 vértices")
        poly = Polygon(b.footprint)
        if not poly.is_valid or poly.area <= 0:
            raise SceneValidationError(f"edificio {i}: footprint no es un polígono simple")
        if not region_box.covers(poly):
            raise SceneValidationError(f"edificio {i}: footprint fuera de la región")
        if b.height_m <= 0:
            raise SceneValidationError(f"edificio {i}: altura debe ser > 0")
        if not (0 <= b.material_index < k):
            raise SceneValidationError(
                f"edificio {i}: material_index {b.material_index} fuera de [0, {k})"
            )
        buildings.append(
            Building(footprint=ensure_ccw(b.footprint), height_m=b.height_m, material_index=b.material_index)
        )

    for m, bs in enumerate(raw.existing_bs):
        if not region_box.covers(shapely.Point(bs.x, bs.y)):
            raise SceneValidationError(f"estación existente {m}: fuera de la región")
        if not (settings.TX_POWER_MIN_DBM <= bs.tx_power_dbm <= settings.TX_POWER_MAX_DBM):
            raise SceneValidationError(
                f"estación existente {m}: tx_power {bs.tx_power_dbm} dBm fuera de "
                f"[{settings.TX_POWER_MIN_DBM}, {settings.TX_POWER_MAX_DBM}]"
            )

    return Scene(
        region=raw.region,
        buildings=tuple(buildings),
        existing_bs=tuple(raw.existing_bs),
        rx_height=raw.rx_height_m,
        carrier_freq=raw.carrier_freq_hz,
        materials=mats,
    )


def _pydantic_detail(exc: ValidationError) -> str:
    err = exc.errors()[0]
    loc = list(err.get("loc", ()))
    if len(loc) >= 2 and loc[0] == "buildings" and isinstance(loc[1], int):
        rest = ".".join(str(p) for p in loc[2:]) or "edificio"
        return f"edificio {loc[1]}: {rest}: {err.get('msg')}"
    return f"{'.'.join(str(p) for p in loc) or 'escena'}: {err.get('msg')}"


def build_scene(data: dict) -> Scene:
    try:
        raw = SceneFile.model_validate(data)
    except ValidationError as exc:
        raise SceneValidationError(_pydantic_detail(exc)) from exc
    return _validate(raw)


def load_scene(path: str | Path) -> Scene:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise SceneParseError(f"no existe el archivo de escena: {p}") from exc
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"escena mal formada ({p}): {exc.msg} en línea {exc.lineno}") from exc

    if not isinstance(data, dict):
        raise SceneParseError(f"escena mal formada ({p}): se esperaba un objeto JSON")

    scene = build_scene(data)
    logger.info(
        "Escena cargada: %s edificios, K=%s, M=%s",
        len(scene.buildings), scene.n_materials, scene.n_existing,
    )
    return scene


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(
        scene.to_file().model_dump_json(indent=2, exclude_none=True) + "\n",
        encoding="utf-8",
    )


# ----------------- Grid -----------------

def _exact(v: float) -> Fraction:
    # repr => decimal más corto; así 0.2 es 1/5 y no 0.2000000000000000111
    return Fraction(repr(float(v)))


def grid_size(width: float, height: float, a: float) -> int:
    """L = ⌈(ancho·alto)/a²⌉ en aritmética exacta."""
    return math.ceil(_exact(width) * _exact(height) / (_exact(a) ** 2))


def make_grid(scene: Scene, a: float) -> Grid:
    if a <= 0:
        raise ArgumentError(f"resolución del grid debe ser > 0 (a={a})")

    reg = scene.region
    width = _exact(reg.xmax) - _exact(reg.xmin)
    height = _exact(reg.ymax) - _exact(reg.ymin)
    exact_a = _exact(a)

    n_points = math.ceil(width * height / exact_a ** 2)
    nx = max(1, math.ceil(width / exact_a))
    ny = math.ceil(n_points / nx)

    dx = reg.width / nx
    dy = reg.height / ny

    idx = np.arange(n_points)
    cols = idx % nx
    rows = idx // nx
    # la fila incompleta se estira sobre todo el ancho
    per_row = np.where(rows == ny - 1, n_points - (ny - 1) * nx, nx)
    xs = reg.xmin + (cols + 0.5) * (reg.width / per_row)
    ys = reg.ymin + (rows + 0.5) * dy

    return Grid(a=a, nx=nx, ny=ny, dx=dx, dy=dy, xs=xs, ys=ys, z=scene.rx_height)


# ----------------- Candidatos -----------------

def _lattice(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.ceil((hi - lo) / step))
    vals = lo + step / 2 + step * np.arange(n)
    return vals[vals <= hi]


def enumerate_candidates(scene: Scene, feasible: FeasibleRegion, step: float) -> List[Candidate]:
    """
    Lattice centrada de paso `step` sobre la región, filtrada a ℱ.
    Un punto sobre el borde de un footprint cuenta como adentro.
    Orden row-major (y creciente, luego x).
    """
    if step <= 0:
        raise ArgumentError(f"step debe ser > 0 (step={step})")

    reg = scene.region
    gx = _lattice(reg.xmin, reg.xmax, step)
    gy = _lattice(reg.ymin, reg.ymax, step)
    yy, xx = np.meshgrid(gy, gx, indexing="ij")
    xs = xx.ravel()
    ys = yy.ravel()
    pts = shapely.points(xs, ys)

    z = np.full(xs.shape, np.nan)
    owner = np.full(xs.shape, -1, dtype=np.int64)

    if feasible.rooftops:
        for i, b in enumerate(scene.buildings):
            inside = shapely.covers(Polygon(b.footprint), pts)
            roof = b.height_m + feasible.mount_offset
            better = inside & ~(z >= roof)
            z[better] = roof
            owner[better] = i

    if feasible.polygons:
        extra = unary_union([Polygon(p) for p in feasible.polygons])
        inside = shapely.covers(extra, pts) & np.isnan(z)
        z[inside] = feasible.mast_height

    keep = ~np.isnan(z)
    if not keep.any():
        raise PlanningError("no hay candidatos factibles en ℱ")

    out = [
        Candidate(x=float(x), y=float(y), z=float(h), building_index=int(o))
        for x, y, h, o in zip(xs[keep], ys[keep], z[keep], owner[keep])
    ]
    logger.debug("Candidatos factibles con paso %s m: %s", step, len(out))
    return out


def drop_occupied(
    candidates: Sequence[Candidate],
    occupied: Sequence[BaseStation],
    tol: float = 1e-6,
) -> List[Candidate]:
    """Quita candidatos que coinciden (en planta) con estaciones ya desplegadas."""
    if not occupied:
        return list(candidates)
    occ = np.array([[b.x, b.y] for b in occupied], dtype=float)
    out = []
    for c in candidates:
        d = np.hypot(occ[:, 0] - c.x, occ[:, 1] - c.y)
        if not (d <= tol).any():
            out.append(c)
    return out


def normalize_positions(scene: Scene, xy: np.ndarray) -> np.ndarray:
    reg = scene.region
    out = np.empty_like(xy, dtype=float)
    out[:, 0] = (xy[:, 0] - reg.xmin) / reg.width
    out[:, 1] = (xy[:, 1] - reg.ymin) / reg.height
    return out


def rooftop_bs(candidate: Candidate, tx_power_dbm: float, antenna_gain_db: Optional[float] = None) -> BaseStation:
    return BaseStation(
        x=candidate.x,
        y=candidate.y,
        z=candidate.z,
        tx_power_dbm=tx_power_dbm,
        antenna_gain_db=settings.ANTENNA_GAIN_DB if antenna_gain_db is None else antenna_gain_db,
    )
