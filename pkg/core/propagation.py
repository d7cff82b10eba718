# core/propagation.py
"""
Motor de propagación diferenciable (el "gemelo digital"):
Friis + pérdida por pared tipo losa, oclusión 2.5D, gradientes analíticos en Θ.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import constants

from core.geometry import segment_edge_hits
from core.materials import MaterialParams
from core.scene import Scene
from core.settings import settings
from schemas.scene import BaseStation

NEPER_TO_DB = 20.0 / math.log(10.0)

# puntos por bloque al trazar cruces (P×E en memoria)
_CHUNK = 4096


class EngineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    wall_thickness_m: float = Field(default_factory=lambda: settings.WALL_THICKNESS_M, gt=0)
    min_distance_m: float = Field(default_factory=lambda: settings.MIN_DISTANCE_M, gt=0)
    noise_floor_dbm: float = Field(default_factory=lambda: settings.NOISE_FLOOR_DBM)
    speed_of_light: float = constants.speed_of_light
    vacuum_permittivity: float = constants.epsilon_0


@dataclass(frozen=True)
class PathCrossings:
    """(edificio, cantidad de cruces efectivos) para un par tx→rx. No depende de Θ."""

    entries: Tuple[Tuple[int, int], ...]

    def as_dict(self) -> dict:
        return dict(self.entries)


# ----------------- Pérdidas -----------------

def free_space_path_loss(d, f: float, d_min: float = 1.0, c: float = constants.speed_of_light):
    """FSPL Friis en dB; la distancia se satura por abajo en d_min."""
    d = np.maximum(np.asarray(d, dtype=float), d_min)
    out = 20.0 * np.log10(d) + 20.0 * math.log10(f) + 20.0 * math.log10(4.0 * math.pi / c)
    return float(out) if out.ndim == 0 else out


def wall_loss_and_grad(sigma, epsilon, t_wall: float, f: float, config: Optional[EngineConfig] = None):
    """
    Pérdida de una pared (dB) y sus derivadas (∂L/∂σ, ∂L/∂ε).

    Absorción: α = (2πf/c)·√ε·g, g = √((√(1+tan²δ) − 1)/2), tanδ = σ/(2πf·ε₀·ε).
    Reflexión: dos interfaces con índice sin pérdidas n = √ε.
    g se evalúa como tanδ/√(2(q+1)) para no perder precisión con σ → 0.
    """
    cfg = config or EngineConfig()
    c = cfg.speed_of_light
    eps0 = cfg.vacuum_permittivity

    sigma = np.asarray(sigma, dtype=float)
    epsilon = np.asarray(epsilon, dtype=float)
    w = 2.0 * math.pi * f

    tan_d = sigma / (w * eps0 * epsilon)
    q = np.sqrt(1.0 + tan_d ** 2)
    root = np.sqrt(2.0 * (q + 1.0))
    g = tan_d / root
    dg_dtan = (q + 1.0) / (2.0 * q * root)

    sqrt_eps = np.sqrt(epsilon)
    alpha = (w / c) * sqrt_eps * g
    # tanδ es lineal en σ
    dtan_dsigma = 1.0 / (w * eps0 * epsilon)
    dalpha_dsigma = (w / c) * sqrt_eps * dg_dtan * dtan_dsigma
    dalpha_deps = (w / c) * (g / (2.0 * sqrt_eps) - sqrt_eps * dg_dtan * tan_d / epsilon)

    l_abs = NEPER_TO_DB * alpha * t_wall

    n = sqrt_eps
    l_refl = -NEPER_TO_DB * (math.log(4.0) + np.log(n) - 2.0 * np.log1p(n))
    dlrefl_dn = -NEPER_TO_DB * (1.0 - n) / (n * (1.0 + n))

    loss = l_abs + l_refl
    d_sigma = NEPER_TO_DB * t_wall * dalpha_dsigma
    d_eps = NEPER_TO_DB * t_wall * dalpha_deps + dlrefl_dn / (2.0 * n)
    return loss, d_sigma, d_eps


def wall_loss(sigma, epsilon, t_wall: float, f: float, config: Optional[EngineConfig] = None):
    loss, _, _ = wall_loss_and_grad(sigma, epsilon, t_wall, f, config)
    return float(loss) if np.ndim(loss) == 0 else loss


# ----------------- Geometría de trayectos -----------------

def crossing_counts(scene: Scene, tx: BaseStation, xs, ys, rx_z: Optional[float] = None) -> np.ndarray:
    """
    Cruces efectivos por edificio para tx → (xs[p], ys[p]); array (P, n_buildings).

    Regla 2.5D: un cruce de arista cuenta si la altura del rayo, interpolada
    linealmente en ese punto, queda por debajo del techo del edificio.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    z_rx = scene.rx_height if rx_z is None else rx_z

    edges = scene.edges
    n_b = len(scene.buildings)
    out = np.zeros((xs.shape[0], n_b), dtype=np.int64)
    if n_b == 0 or xs.shape[0] == 0:
        return out

    edge_h = edges.heights[edges.building]
    owner = np.zeros((edges.building.shape[0], n_b))
    owner[np.arange(edges.building.shape[0]), edges.building] = 1.0

    for lo in range(0, xs.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, xs.shape[0])
        t, hit = segment_edge_hits(tx.x, tx.y, xs[lo:hi], ys[lo:hi], edges.start, edges.end)
        ray_z = tx.z + t * (z_rx - tx.z)
        hit &= ray_z < edge_h[None, :]
        out[lo:hi] = np.rint(hit.astype(float) @ owner).astype(np.int64)
    return out


def trace_crossings(scene: Scene, tx: BaseStation, rx: Sequence[float]) -> PathCrossings:
    rx_z = rx[2] if len(rx) > 2 else None
    counts = crossing_counts(scene, tx, [rx[0]], [rx[1]], rx_z)[0]
    return PathCrossings(entries=tuple((int(b), int(c)) for b, c in enumerate(counts) if c > 0))


def material_counts(scene: Scene, counts: np.ndarray) -> np.ndarray:
    """Agrupa cruces por edificio (P, n_b) en cruces por material (P, K)."""
    k = scene.n_materials
    out = np.zeros((counts.shape[0], k), dtype=float)
    if counts.shape[1]:
        np.add.at(out.T, scene.edges.material_of, counts.T.astype(float))
    return out


# ----------------- RSRP -----------------

def distance_3d(tx: BaseStation, xs, ys, rx_z: float) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return np.sqrt((xs - tx.x) ** 2 + (ys - tx.y) ** 2 + (rx_z - tx.z) ** 2)


def free_space_rsrp(scene: Scene, config: EngineConfig, tx: BaseStation, xs, ys, rx_z: Optional[float] = None):
    """Parte de la RSRP que no depende de Θ: potencia + ganancia − FSPL."""
    z_rx = scene.rx_height if rx_z is None else rx_z
    d = distance_3d(tx, xs, ys, z_rx)
    fspl = free_space_path_loss(d, scene.carrier_freq, config.min_distance_m, config.speed_of_light)
    return tx.tx_power_dbm + tx.antenna_gain_db - fspl


def material_wall_losses(scene: Scene, config: EngineConfig, params: MaterialParams):
    return wall_loss_and_grad(
        params.sigma, params.epsilon, config.wall_thickness_m, scene.carrier_freq, config
    )


def rsrp_field(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    tx: BaseStation,
    xs,
    ys,
    rx_z: Optional[float] = None,
) -> np.ndarray:
    """RSRP (dBm) desde `tx` en todos los puntos (xs, ys)."""
    base = free_space_rsrp(scene, config, tx, xs, ys, rx_z)
    if scene.n_materials == 0 or not scene.buildings:
        return np.asarray(base, dtype=float)
    counts = material_counts(scene, crossing_counts(scene, tx, xs, ys, rx_z))
    losses, _, _ = material_wall_losses(scene, config, params)
    return base - counts @ losses


def rsrp(scene: Scene, config: EngineConfig, params: MaterialParams, tx: BaseStation, rx: Sequence[float]) -> float:
    rx_z = rx[2] if len(rx) > 2 else None
    return float(rsrp_field(scene, config, params, tx, [rx[0]], [rx[1]], rx_z)[0])


def rsrp_gradient(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    tx: BaseStation,
    rx: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray]:
    """(∂rsrp/∂σ_k, ∂rsrp/∂ε_k); cero para materiales que el trayecto no cruza."""
    rx_z = rx[2] if len(rx) > 2 else None
    counts = material_counts(scene, crossing_counts(scene, tx, [rx[0]], [rx[1]], rx_z))[0]
    _, d_sigma, d_eps = material_wall_losses(scene, config, params)
    return -counts * d_sigma, -counts * d_eps
