# core/gp.py
"""
Surrogate GP (Matérn 5/2) y Expected Improvement.

Se ajusta en el espacio de salidas estandarizado (kernel de amplitud 1) y se
des-estandariza al predecir, así la varianza a priori queda en var(y).
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import norm

from core.errors import ArgumentError, NumericalError

logger = logging.getLogger(__name__)

LENGTH_SCALE_GRID: Tuple[float, ...] = (0.05, 0.1, 0.2, 0.4)
DEFAULT_NOISE = 1e-6
_JITTER_RETRIES = 3

_SQRT5 = math.sqrt(5.0)


def matern52(xa: np.ndarray, xb: np.ndarray, length_scale: float) -> np.ndarray:
    diff = xa[:, None, :] - xb[None, :, :]
    r = np.sqrt(np.sum(diff ** 2, axis=-1)) / length_scale
    return (1.0 + _SQRT5 * r + 5.0 * r ** 2 / 3.0) * np.exp(-_SQRT5 * r)


@dataclass(frozen=True)
class GpModel:
    x_train: np.ndarray      # (n, d)
    y_train: np.ndarray      # (n,) valores originales
    y_mean: float
    y_scale: float
    length_scale: float
    signal_variance: float   # var(y) en unidades originales
    noise: float             # λ efectivo (después del jitter)
    chol: Tuple[np.ndarray, bool]
    alpha: np.ndarray        # (K+λI)⁻¹ y_std

    def predict(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """(μ, σ²) en unidades originales; σ² saturada en 0 por abajo."""
        x = np.asarray(x, dtype=float)
        d = self.x_train.shape[1]
        if x.ndim == 0:
            x = x.reshape(1, 1)
        elif x.ndim == 1:
            x = x[:, None] if d == 1 else x[None, :]
        k_star = matern52(x, self.x_train, self.length_scale)
        mu_std = k_star @ self.alpha
        v = linalg.cho_solve(self.chol, k_star.T)
        var_std = 1.0 - np.sum(k_star * v.T, axis=1)
        var_std = np.maximum(var_std, 0.0)
        return self.y_mean + self.y_scale * mu_std, var_std * self.y_scale ** 2


def _standardize(y: np.ndarray) -> Tuple[float, float]:
    mean = float(np.mean(y))
    std = float(np.std(y))
    return mean, (std if std > 0 else 1.0)


def _factor(x: np.ndarray, length_scale: float, noise: float):
    kmat = matern52(x, x, length_scale)
    lam = noise
    for attempt in range(_JITTER_RETRIES + 1):
        try:
            chol = linalg.cho_factor(kmat + lam * np.eye(x.shape[0]), lower=True)
            return chol, lam
        except linalg.LinAlgError:
            if attempt == _JITTER_RETRIES:
                break
            lam *= 10.0
            logger.debug("Cholesky falló, jitter -> %g", lam)
    raise NumericalError(f"no se pudo factorizar la matriz del kernel (λ final {lam:g})")


def log_marginal_likelihood(x: np.ndarray, y: np.ndarray, length_scale: float, noise: float = DEFAULT_NOISE) -> float:
    mean, scale = _standardize(y)
    ys = (y - mean) / scale
    chol, _ = _factor(x, length_scale, noise)
    alpha = linalg.cho_solve(chol, ys)
    return float(
        -0.5 * ys @ alpha
        - np.sum(np.log(np.diag(chol[0])))
        - 0.5 * ys.shape[0] * math.log(2.0 * math.pi)
    )


def select_length_scale(
    x: np.ndarray,
    y: np.ndarray,
    grid: Sequence[float] = LENGTH_SCALE_GRID,
    noise: float = DEFAULT_NOISE,
) -> float:
    """Máxima verosimilitud marginal sobre una grilla fija (empate => la menor)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    best, best_ll = grid[0], -np.inf
    for ls in grid:
        ll = log_marginal_likelihood(x, y, ls, noise)
        if ll > best_ll:
            best, best_ll = ls, ll
    return float(best)


def gp_fit(x, y, length_scale: float = 0.1, noise: float = DEFAULT_NOISE) -> GpModel:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 1 or x.shape[0] != y.shape[0]:
        raise ArgumentError("gp_fit necesita al menos una observación y X, y del mismo largo")
    if length_scale <= 0:
        raise ArgumentError(f"length_scale debe ser > 0 ({length_scale})")

    mean, scale = _standardize(y)
    ys = (y - mean) / scale
    chol, lam = _factor(x, length_scale, noise)
    alpha = linalg.cho_solve(chol, ys)

    var = float(np.var(y))
    return GpModel(
        x_train=x,
        y_train=y,
        y_mean=mean,
        y_scale=scale,
        length_scale=length_scale,
        signal_variance=var if var > 0 else 1.0,
        noise=lam,
        chol=chol,
        alpha=alpha,
    )


def ei_closed_form(mu, s, t_best: float, xi: float = 0.0):
    """
    EI = Δ·Φ(Δ/s) + s·φ(Δ/s), con Δ = μ − t_best − ξ; si s = 0, max(Δ, 0).
    """
    mu = np.asarray(mu, dtype=float)
    s = np.asarray(s, dtype=float)
    delta = mu - t_best - xi
    pos = s > 0
    safe_s = np.where(pos, s, 1.0)
    z = delta / safe_s
    ei = np.where(pos, delta * norm.cdf(z) + safe_s * norm.pdf(z), np.maximum(delta, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def expected_improvement(model: GpModel, x, t_best: float, xi: float = 0.0):
    if xi < 0:
        raise ArgumentError(f"xi debe ser >= 0 ({xi})")
    ndim = np.ndim(x)
    single = ndim == 0 or (ndim == 1 and model.x_train.shape[1] > 1)
    mu, var = model.predict(x)
    ei = ei_closed_form(mu, np.sqrt(var), t_best, xi)
    if single:
        return float(np.atleast_1d(ei)[0])
    return np.atleast_1d(ei)


def argmax_lowest(values: np.ndarray, allowed: Optional[np.ndarray] = None) -> int:
    """Índice del máximo (primer índice en empates) entre los permitidos; -1 si no hay."""
    vals = np.asarray(values, dtype=float)
    if allowed is not None:
        vals = np.where(allowed, vals, -np.inf)
    if vals.size == 0 or not np.isfinite(vals).any():
        return -1
    return int(np.argmax(vals))
