# core/geometry.py
"""
Primitivas planas: orientación de polígonos y cruces segmento/arista.
Todo en metros, coordenadas locales.
"""
from typing import Sequence, Tuple

import numpy as np

Point = Tuple[float, float]

# desempate en vértices: el parámetro de arista se corre +EPS_GEOM antes de contar
EPS_GEOM = 1e-9

# denominador mínimo para considerar dos segmentos no paralelos
_PARALLEL_TOL = 1e-12


def signed_area(poly: Sequence[Point]) -> float:
    """Área con signo (shoelace). Positiva si el polígono es antihorario."""
    acc = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return 0.5 * acc


def ensure_ccw(poly: Sequence[Point]) -> Tuple[Point, ...]:
    pts = tuple((float(x), float(y)) for x, y in poly)
    if signed_area(pts) < 0:
        return tuple(reversed(pts))
    return pts


def polygon_edges(poly: Sequence[Point]) -> Tuple[np.ndarray, np.ndarray]:
    """Devuelve (inicio, fin) de cada arista, arrays (n, 2)."""
    start = np.asarray(poly, dtype=float)
    end = np.roll(start, -1, axis=0)
    return start, end


def segment_edge_hits(
    ax: float,
    ay: float,
    bx: np.ndarray,
    by: np.ndarray,
    edge_start: np.ndarray,
    edge_end: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Intersección exacta de los segmentos A→B_p (un origen, P destinos) contra E aristas.

    Devuelve (t, hit), ambos (P, E): t es el parámetro sobre A→B_p y hit marca
    los cruces válidos. Regla de vértice: la arista se toma semiabierta [0, 1)
    después de correr su parámetro en +EPS_GEOM, así un cruce justo en un
    vértice cuenta una sola vez.
    """
    rx = (np.asarray(bx, dtype=float) - ax)[:, None]
    ry = (np.asarray(by, dtype=float) - ay)[:, None]

    sx = (edge_end[:, 0] - edge_start[:, 0])[None, :]
    sy = (edge_end[:, 1] - edge_start[:, 1])[None, :]

    qx = (edge_start[:, 0] - ax)[None, :]
    qy = (edge_start[:, 1] - ay)[None, :]

    den = rx * sy - ry * sx
    ok = np.abs(den) > _PARALLEL_TOL
    safe = np.where(ok, den, 1.0)

    t = (qx * sy - qy * sx) / safe
    u = (qx * ry - qy * rx) / safe + EPS_GEOM

    hit = ok & (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u < 1.0)
    return t, hit

