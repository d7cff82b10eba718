# core/calibration.py
"""
Etapa 1: calibración del gemelo. Ajusta Θ a las RSRP medidas minimizando
el MSE con descenso de gradiente proyectado (SGD o Adam).
"""
import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import shapely
from pydantic import ValidationError
from shapely.geometry import box

from core.errors import ArgumentError, MeasurementError, NumericalError
from core.materials import MaterialParams
from core.propagation import (
    EngineConfig,
    crossing_counts,
    free_space_rsrp,
    material_counts,
    material_wall_losses,
    rsrp_field,
)
from core.scene import Scene
from schemas.measurements import MeasurementRow
from schemas.reports import CalibrationReport
from schemas.scene import Materials

logger = logging.getLogger(__name__)

OPTIMIZERS = ("sgd", "adam")


@dataclass
class MeasurementSet:
    xs: np.ndarray
    ys: np.ndarray
    rsrp: np.ndarray
    # -1 => sin estación asignada en el archivo
    bs_index: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        self.rsrp = np.asarray(self.rsrp, dtype=float)
        if self.bs_index is None:
            self.bs_index = np.full(self.xs.shape, -1, dtype=np.int64)
        self.bs_index = np.asarray(self.bs_index, dtype=np.int64)

    def __len__(self) -> int:
        return int(self.xs.shape[0])


# ----------------- Archivo de mediciones -----------------

def validate_measurements(scene: Scene, ms: MeasurementSet) -> None:
    if len(ms) < 1:
        raise MeasurementError("el set de mediciones está vacío")
    region = box(scene.region.xmin, scene.region.ymin, scene.region.xmax, scene.region.ymax)
    inside = shapely.covers(region, shapely.points(ms.xs, ms.ys))
    if not inside.all():
        bad = int(np.flatnonzero(~inside)[0])
        raise MeasurementError(f"medición {bad}: ubicación fuera de la región")
    bad_bs = (ms.bs_index >= scene.n_existing) | (ms.bs_index < -1)
    if bad_bs.any():
        bad = int(np.flatnonzero(bad_bs)[0])
        raise MeasurementError(
            f"medición {bad}: bs_index {int(ms.bs_index[bad])} fuera de [0, {scene.n_existing})"
        )


def load_measurements(path: str | Path, scene: Optional[Scene] = None) -> MeasurementSet:
    p = Path(path)
    rows: List[MeasurementRow] = []
    try:
        with open(p, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = set(reader.fieldnames or [])
            if not {"x", "y", "rsrp_dbm"} <= header:
                raise MeasurementError(f"{p}: cabecera debe ser x,y,rsrp_dbm[,bs_index]")
            for i, rec in enumerate(reader):
                try:
                    rows.append(MeasurementRow.model_validate(rec))
                except ValidationError as exc:
                    raise MeasurementError(f"{p}: fila {i}: {exc.errors()[0].get('msg')}") from exc
    except FileNotFoundError as exc:
        raise MeasurementError(f"no existe el archivo de mediciones: {p}") from exc

    ms = MeasurementSet(
        xs=np.array([r.x for r in rows]),
        ys=np.array([r.y for r in rows]),
        rsrp=np.array([r.rsrp_dbm for r in rows]),
        bs_index=np.array([-1 if r.bs_index is None else r.bs_index for r in rows], dtype=np.int64),
    )
    if scene is not None:
        validate_measurements(scene, ms)
    elif len(ms) < 1:
        raise MeasurementError("el set de mediciones está vacío")
    return ms


def save_measurements(ms: MeasurementSet, path: str | Path) -> None:
    with_bs = bool((ms.bs_index >= 0).any())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "rsrp_dbm", "bs_index"] if with_bs else ["x", "y", "rsrp_dbm"])
        for x, y, r, b in zip(ms.xs, ms.ys, ms.rsrp, ms.bs_index):
            row = [repr(float(x)), repr(float(y)), repr(float(r))]
            if with_bs:
                row.append("" if b < 0 else int(b))
            w.writerow(row)


def synthesize_measurements(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    n_points: int,
    noise_sigma: float,
    seed: int,
) -> MeasurementSet:
    """
    Reemplazo del drive test: puntos uniformes en la región, RSRP de la mejor
    estación existente bajo `params` + ruido gaussiano N(0, noise_sigma²) dB.
    """
    if n_points < 1:
        raise ArgumentError(f"n_points debe ser >= 1 ({n_points})")
    if noise_sigma < 0:
        raise ArgumentError(f"noise_sigma debe ser >= 0 ({noise_sigma})")
    if scene.n_existing == 0:
        raise MeasurementError("la escena no tiene estaciones existentes")

    rng = np.random.default_rng(seed)
    reg = scene.region
    xs = rng.uniform(reg.xmin, reg.xmax, size=n_points)
    ys = rng.uniform(reg.ymin, reg.ymax, size=n_points)
    fields = np.stack([rsrp_field(scene, config, params, bs, xs, ys) for bs in scene.existing_bs])
    serving = np.argmax(fields, axis=0)
    clean = fields[serving, np.arange(n_points)]
    noise = rng.normal(0.0, noise_sigma, size=n_points) if noise_sigma > 0 else np.zeros(n_points)
    return MeasurementSet(xs=xs, ys=ys, rsrp=clean + noise, bs_index=serving)


# ----------------- Pérdida y gradiente -----------------

def associate(scene: Scene, config: EngineConfig, params: MaterialParams, ms: MeasurementSet) -> np.ndarray:
    """Estación servidora por medición: la del archivo, o la de mayor RSRP simulada con `params`."""
    if scene.n_existing == 0:
        raise MeasurementError("la escena no tiene estaciones existentes para asociar mediciones")
    fields = np.stack([rsrp_field(scene, config, params, bs, ms.xs, ms.ys) for bs in scene.existing_bs])
    best = np.argmax(fields, axis=0)
    return np.where(ms.bs_index >= 0, ms.bs_index, best).astype(np.int64)


class CalibrationProblem:
    """
    Precalcula la parte de la RSRP que no depende de Θ (potencia − FSPL) y los
    cruces por material de cada medición; después r̃(Θ) = base − cruces·L(Θ).
    """

    def __init__(self, scene: Scene, config: EngineConfig, ms: MeasurementSet, association: np.ndarray):
        if len(ms) < 1:
            raise ArgumentError("el set de mediciones está vacío")
        self.scene = scene
        self.config = config
        self.measured = ms.rsrp
        self.association = association

        n = len(ms)
        self.base = np.empty(n)
        self.counts = np.zeros((n, scene.n_materials))
        for m in np.unique(association):
            idx = association == m
            bs = scene.existing_bs[int(m)]
            self.base[idx] = free_space_rsrp(scene, config, bs, ms.xs[idx], ms.ys[idx])
            self.counts[idx] = material_counts(scene, crossing_counts(scene, bs, ms.xs[idx], ms.ys[idx]))

    @property
    def crossings_per_material(self) -> np.ndarray:
        return self.counts.sum(axis=0).astype(np.int64)

    def _rows(self, idx: Optional[np.ndarray]):
        if idx is None:
            return self.base, self.counts, self.measured
        return self.base[idx], self.counts[idx], self.measured[idx]

    def residuals(self, params: MaterialParams, idx: Optional[np.ndarray] = None) -> np.ndarray:
        base, counts, measured = self._rows(idx)
        losses, _, _ = material_wall_losses(self.scene, self.config, params)
        return base - counts @ losses - measured

    def loss(self, params: MaterialParams, idx: Optional[np.ndarray] = None) -> float:
        res = self.residuals(params, idx)
        return float(np.mean(res ** 2))

    def gradient(self, params: MaterialParams, idx: Optional[np.ndarray] = None) -> np.ndarray:
        """∇ℒ como vector plano [∂/∂σ..., ∂/∂ε...]."""
        base, counts, measured = self._rows(idx)
        losses, d_sigma, d_eps = material_wall_losses(self.scene, self.config, params)
        res = base - counts @ losses - measured
        # ∂r̃_p/∂σ_k = −cruces[p,k]·∂L/∂σ_k
        weighted = (2.0 / res.shape[0]) * (res @ counts)
        return np.concatenate([-weighted * d_sigma, -weighted * d_eps])


def loss(scene: Scene, config: EngineConfig, params: MaterialParams, ms: MeasurementSet) -> float:
    """MSE (dB²) entre RSRP simulada y medida."""
    if len(ms) < 1:
        raise ArgumentError("el set de mediciones está vacío")
    return CalibrationProblem(scene, config, ms, associate(scene, config, params, ms)).loss(params)


def loss_gradient(scene: Scene, config: EngineConfig, params: MaterialParams, ms: MeasurementSet):
    """(∂ℒ/∂σ, ∂ℒ/∂ε), cada uno de largo K."""
    if len(ms) < 1:
        raise ArgumentError("el set de mediciones está vacío")
    grad = CalibrationProblem(scene, config, ms, associate(scene, config, params, ms)).gradient(params)
    k = params.k
    return grad[:k], grad[k:]


# ----------------- Optimizadores -----------------

class SgdOptimizer:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, vec: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return vec - self.lr * grad


class AdamOptimizer:
    def __init__(self, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.m: Optional[np.ndarray] = None
        self.v: Optional[np.ndarray] = None
        self.t = 0

    def step(self, vec: np.ndarray, grad: np.ndarray) -> np.ndarray:
        b1, b2 = self.betas
        if self.m is None:
            self.m = np.zeros_like(vec)
            self.v = np.zeros_like(vec)
        self.t += 1
        self.m = b1 * self.m + (1 - b1) * grad
        self.v = b2 * self.v + (1 - b2) * grad ** 2
        m_hat = self.m / (1 - b1 ** self.t)
        v_hat = self.v / (1 - b2 ** self.t)
        return vec - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(name: str, lr: float):
    key = (name or "").strip().lower()
    if key == "sgd":
        return SgdOptimizer(lr)
    if key == "adam":
        return AdamOptimizer(lr)
    raise ArgumentError(f"optimizador desconocido: {name!r} (usar sgd o adam)")


# ----------------- Loop -----------------

@dataclass
class CalibrationResult:
    report: CalibrationReport
    params: MaterialParams
    step_times: List[float] = field(default_factory=list)


def _materials(params: MaterialParams, labels=None) -> Materials:
    return Materials(sigma=tuple(params.sigma.tolist()), epsilon=tuple(params.epsilon.tolist()), labels=labels)


def calibrate(
    scene: Scene,
    config: EngineConfig,
    params0: MaterialParams,
    ms: MeasurementSet,
    eta: float,
    epochs: int,
    optimizer: str = "adam",
    batch_size: Optional[int] = None,
    seed: int = 0,
) -> CalibrationResult:
    if eta <= 0:
        raise ArgumentError(f"learning rate debe ser > 0 (eta={eta})")
    if epochs < 1:
        raise ArgumentError(f"epochs debe ser >= 1 (epochs={epochs})")
    opt = make_optimizer(optimizer, eta)

    n = len(ms)
    batch = n if not batch_size or batch_size >= n else int(batch_size)
    rng = np.random.default_rng(seed)

    params = params0.projected()
    # asociación congelada con Θ⁰
    problem = CalibrationProblem(scene, config, ms, associate(scene, config, params, ms))

    initial_loss = problem.loss(params)
    if not np.isfinite(initial_loss):
        raise NumericalError("pérdida no finita antes de la primera época")

    curve: List[float] = []
    sig_hist: List[List[float]] = []
    eps_hist: List[List[float]] = []
    step_times: List[float] = []

    vec = params.as_vector()
    for epoch in range(epochs):
        t0 = time.perf_counter()
        order = np.arange(n) if batch == n else rng.permutation(n)
        for lo in range(0, n, batch):
            idx = None if batch == n else order[lo:lo + batch]
            grad = problem.gradient(MaterialParams.from_vector(vec), idx)
            if not np.all(np.isfinite(grad)):
                raise NumericalError(f"gradiente no finito en la época {epoch}")
            vec = MaterialParams.from_vector(opt.step(vec, grad)).projected().as_vector()

        current = MaterialParams.from_vector(vec)
        if not current.in_bounds():
            raise NumericalError(f"Θ fuera de la caja después de la época {epoch}")

        value = problem.loss(current)
        if not np.isfinite(value):
            raise NumericalError(f"pérdida no finita en la época {epoch}")
        step_times.append(time.perf_counter() - t0)

        curve.append(value)
        sig_hist.append(current.sigma.tolist())
        eps_hist.append(current.epsilon.tolist())

        if epoch % 50 == 0 or epoch == epochs - 1:
            logger.info("época %s/%s: pérdida %.4f dB²", epoch + 1, epochs, value)

    final = MaterialParams.from_vector(vec)
    report = CalibrationReport(
        loss_curve=curve,
        initial_loss=initial_loss,
        final_loss=curve[-1],
        theta_star=_materials(final, scene.materials.labels),
        theta_init=_materials(params, scene.materials.labels),
        crossings_per_material=problem.crossings_per_material.tolist(),
        sigma_history=sig_hist,
        epsilon_history=eps_hist,
        optimizer=optimizer.strip().lower(),
        learning_rate=eta,
        epochs=epochs,
        batch_size=batch,
    )
    return CalibrationResult(report=report, params=final, step_times=step_times)


def initial_params(scene: Scene, init: str, seed: int) -> MaterialParams:
    """
    Θ⁰: "labels" usa los valores canónicos de las etiquetas (si la escena las
    trae), "scene" los valores del archivo, "random" uniforme en la caja.
    "auto" = labels si existen, si no random.
    """
    mode = (init or "auto").strip().lower()
    if mode == "auto":
        mode = "labels" if scene.materials.labels else "random"
    if mode == "labels":
        if not scene.materials.labels:
            raise ArgumentError("la escena no trae etiquetas de material")
        return MaterialParams.from_labels(scene.materials.labels, scene.carrier_freq)
    if mode == "scene":
        return MaterialParams(np.array(scene.materials.sigma), np.array(scene.materials.epsilon)).projected()
    if mode == "random":
        return MaterialParams.random(scene.n_materials, np.random.default_rng(seed))
    raise ArgumentError(f"inicialización desconocida: {init!r} (auto, labels, scene, random)")


def scene_params(scene: Scene) -> MaterialParams:
    return MaterialParams(np.array(scene.materials.sigma), np.array(scene.materials.epsilon))
