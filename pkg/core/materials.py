# core/materials.py
"""
Parámetros electromagnéticos Θ (σ conductividad S/m, ε permitividad relativa)
y la librería de etiquetas con sus valores canónicos.
"""
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from core.errors import ArgumentError

SIGMA_BOUNDS: Tuple[float, float] = (0.0, 2.0)
EPSILON_BOUNDS: Tuple[float, float] = (1.0, 6.0)

# intervalos abiertos => se proyecta sobre [lo+δ, hi−δ]
DELTA_BOUND = 1e-3

# ITU-R P.2040: ε = a·f^b, σ = c·f^d con f en GHz
_ITU_MATERIALS: Dict[str, Tuple[float, float, float, float]] = {
    "concrete": (5.24, 0.0, 0.0462, 0.7822),
    "brick": (3.91, 0.0, 0.0238, 0.16),
    "plasterboard": (2.73, 0.0, 0.0085, 0.9395),
    "wood": (1.99, 0.0, 0.0047, 1.0718),
    "glass": (6.31, 0.0, 0.0036, 1.3394),
    "ceiling_board": (1.48, 0.0, 0.0011, 1.0750),
    "floorboard": (3.66, 0.0, 0.0044, 1.3515),
    "marble": (7.074, 0.0, 0.0055, 0.9262),
    "metal": (1.0, 0.0, 1e7, 0.0),
}


def known_labels() -> Tuple[str, ...]:
    return tuple(sorted(_ITU_MATERIALS))


def lower_bounds(k: int) -> np.ndarray:
    return np.concatenate([
        np.full(k, SIGMA_BOUNDS[0] + DELTA_BOUND),
        np.full(k, EPSILON_BOUNDS[0] + DELTA_BOUND),
    ])


def upper_bounds(k: int) -> np.ndarray:
    return np.concatenate([
        np.full(k, SIGMA_BOUNDS[1] - DELTA_BOUND),
        np.full(k, EPSILON_BOUNDS[1] - DELTA_BOUND),
    ])


@dataclass
class MaterialParams:
    """
    Θ como dos vectores de largo K. El vector plano es [σ_0..σ_K-1, ε_0..ε_K-1].
    Lo muta solo el loop de calibración.
    """

    sigma: np.ndarray
    epsilon: np.ndarray

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float).copy()
        self.epsilon = np.asarray(self.epsilon, dtype=float).copy()
        if self.sigma.shape != self.epsilon.shape or self.sigma.ndim != 1:
            raise ArgumentError("sigma y epsilon deben ser vectores del mismo largo")

    @property
    def k(self) -> int:
        return int(self.sigma.shape[0])

    def copy(self) -> "MaterialParams":
        return MaterialParams(self.sigma, self.epsilon)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.sigma, self.epsilon])

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "MaterialParams":
        vec = np.asarray(vec, dtype=float)
        k = vec.shape[0] // 2
        return cls(vec[:k], vec[k:])

    def projected(self) -> "MaterialParams":
        vec = np.clip(self.as_vector(), lower_bounds(self.k), upper_bounds(self.k))
        return MaterialParams.from_vector(vec)

    def in_bounds(self) -> bool:
        vec = self.as_vector()
        return bool(np.all(vec >= lower_bounds(self.k)) and np.all(vec <= upper_bounds(self.k)))

    @classmethod
    def random(cls, k: int, rng: np.random.Generator) -> "MaterialParams":
        lo = lower_bounds(k)
        hi = upper_bounds(k)
        return cls.from_vector(rng.uniform(lo, hi))

    @classmethod
    def from_labels(cls, labels: Sequence[str], freq_hz: float) -> "MaterialParams":
        f_ghz = freq_hz / 1e9
        sig, eps = [], []
        for lab in labels:
            key = lab.strip().lower()
            if key not in _ITU_MATERIALS:
                raise ArgumentError(
                    f"material desconocido: {lab!r} (conocidos: {', '.join(known_labels())})"
                )
            a, b, c, d = _ITU_MATERIALS[key]
            eps.append(a * f_ghz ** b)
            sig.append(c * f_ghz ** d)
        return cls(np.array(sig), np.array(eps)).projected()
