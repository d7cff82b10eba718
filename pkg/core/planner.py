# core/planner.py
"""
Etapa 2: despliegue incremental de estaciones base.

- plan(): una BO (GP + EI) por estación nueva, sobre los candidatos discretos de ℱ.
- baseline_random(): mejor de n_groups grupos aleatorios de N candidatos.
- baseline_exhaustive(): búsqueda exhaustiva greedy, una estación a la vez.
"""
import logging
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from core.errors import ArgumentError, NumericalError, PlanningError
from core.gp import argmax_lowest, expected_improvement, gp_fit, select_length_scale
from core.materials import MaterialParams
from core.propagation import EngineConfig, rsrp_field
from core.radiomap import radiomap_from_fields, solve_radiomap, target
from core.scene import (
    Candidate,
    FeasibleRegion,
    Grid,
    Scene,
    drop_occupied,
    enumerate_candidates,
    normalize_positions,
    rooftop_bs,
)
from core.settings import settings
from schemas.reports import BsSearchTrace, Evaluation, Metrics, PlanReport, TwinGapReport
from schemas.scene import BaseStation

logger = logging.getLogger(__name__)

# memoria máxima para campos RSRP cacheados por candidato (Θ fijo)
FIELD_CACHE_BYTES = 512 * 1024 * 1024


# ----------------- Consulta al gemelo -----------------

class TwinEvaluator:
    """
    Cada llamada a evaluate*/evaluate_group es una consulta al gemelo (DRT):
    T(𝓑̂ ∪ 𝓑̄ ∪ extra). Los campos RSRP por candidato no dependen de lo ya
    desplegado, así que se cachean (LRU acotado en bytes).
    """

    def __init__(
        self,
        scene: Scene,
        config: EngineConfig,
        params: MaterialParams,
        grid: Grid,
        candidates: Sequence[Candidate],
        alpha_weight: float,
        rth_dbm: float,
        tx_power_dbm: float,
        antenna_gain_db: Optional[float] = None,
    ):
        self.scene = scene
        self.config = config
        self.params = params
        self.grid = grid
        self.candidates = list(candidates)
        self.alpha_weight = alpha_weight
        self.rth_dbm = rth_dbm
        self.tx_power_dbm = tx_power_dbm
        self.antenna_gain_db = antenna_gain_db
        self.queries = 0

        self.existing_fields = [
            rsrp_field(scene, config, params, bs, grid.xs, grid.ys, grid.z) for bs in scene.existing_bs
        ]
        self.committed: List[int] = []

        per_field = max(1, grid.size * 8)
        self._cache_limit = max(1, FIELD_CACHE_BYTES // per_field)
        self._cache: "OrderedDict[int, np.ndarray]" = OrderedDict()

    def new_bs(self, idx: int) -> BaseStation:
        return rooftop_bs(self.candidates[idx], self.tx_power_dbm, self.antenna_gain_db)

    def field(self, idx: int) -> np.ndarray:
        hit = self._cache.get(idx)
        if hit is not None:
            self._cache.move_to_end(idx)
            return hit
        f = rsrp_field(self.scene, self.config, self.params, self.new_bs(idx), self.grid.xs, self.grid.ys, self.grid.z)
        self._cache[idx] = f
        if len(self._cache) > self._cache_limit:
            self._cache.popitem(last=False)
        return f

    def _metrics(self, fields: List[np.ndarray]) -> Metrics:
        self.queries += 1
        radio_map = radiomap_from_fields(self.grid, np.vstack(fields), self.config.noise_floor_dbm)
        return target(radio_map, self.alpha_weight, self.rth_dbm)

    def evaluate(self, idx: int) -> Metrics:
        """T con lo existente + lo comprometido + el candidato idx."""
        fields = self.existing_fields + [self.field(i) for i in self.committed] + [self.field(idx)]
        m = self._metrics(fields)
        logger.debug("consulta %s: candidato %s -> T=%.5f", self.queries, idx, m.target)
        return m

    def evaluate_group(self, group: Sequence[int]) -> Metrics:
        """T con lo existente + un grupo completo (ignora lo comprometido)."""
        return self._metrics(self.existing_fields + [self.field(i) for i in group])

    def baseline(self) -> Optional[Metrics]:
        """Métricas de 𝓑̂ sola (no cuenta como consulta)."""
        if not self.existing_fields:
            return None
        radio_map = radiomap_from_fields(self.grid, np.vstack(self.existing_fields), self.config.noise_floor_dbm)
        return target(radio_map, self.alpha_weight, self.rth_dbm)

    def commit(self, idx: int) -> None:
        self.committed.append(idx)


# ----------------- Estado del planner -----------------

@dataclass
class PlannerState:
    seed: int
    observations: List[Tuple[int, float]] = field(default_factory=list)
    t_best: float = -np.inf
    selected: List[int] = field(default_factory=list)
    occupied: Set[int] = field(default_factory=set)
    queries: int = 0

    def start_round(self) -> None:
        self.observations = []
        self.t_best = -np.inf

    def observe(self, idx: int, value: float) -> None:
        self.observations.append((idx, value))
        self.t_best = max(self.t_best, value)
        self.queries += 1

    def observed(self) -> Set[int]:
        return {i for i, _ in self.observations}

    def best_observed(self) -> int:
        # primer máximo => desempate por orden de observación
        values = [v for _, v in self.observations]
        return self.observations[int(np.argmax(values))][0]

    def select(self, idx: int) -> None:
        self.selected.append(idx)
        self.occupied.add(idx)


def select_next(model, candidates: np.ndarray, state: PlannerState, xi: float) -> int:
    """
    argmax de EI sobre los candidatos no ocupados ni ya observados en esta ronda;
    empates => menor índice.
    """
    n = candidates.shape[0]
    excluded = state.occupied | state.observed()
    allowed = np.ones(n, dtype=bool)
    if excluded:
        allowed[list(excluded)] = False
    if not allowed.any():
        raise PlanningError("no quedan candidatos factibles para evaluar")
    ei = expected_improvement(model, candidates, state.t_best, xi)
    return argmax_lowest(np.atleast_1d(ei), allowed)


# ----------------- Helpers -----------------

def _pool(scene: Scene, feasible: FeasibleRegion, step: float) -> List[Candidate]:
    pool = drop_occupied(enumerate_candidates(scene, feasible, step), scene.existing_bs)
    if not pool:
        raise PlanningError("todos los candidatos coinciden con estaciones existentes")
    return pool


def _check_monotone(history: List[Metrics], base: Optional[Metrics]) -> None:
    prev = base.target if base is not None else -np.inf
    for n, m in enumerate(history, start=1):
        if m.target < prev:
            raise NumericalError(f"T bajó al comprometer la estación {n}: {m.target} < {prev}")
        prev = m.target


def _evaluation(ev: TwinEvaluator, idx: int, value: float, phase: str) -> Evaluation:
    c = ev.candidates[idx]
    return Evaluation(candidate_index=idx, x=c.x, y=c.y, target=value, phase=phase)


def _defaults(alpha_weight, rth_dbm, tx_power_dbm):
    return (
        settings.ALPHA_WEIGHT if alpha_weight is None else alpha_weight,
        settings.RTH_DBM if rth_dbm is None else rth_dbm,
        settings.TX_POWER_DBM if tx_power_dbm is None else tx_power_dbm,
    )


# ----------------- AutoPlan (BO incremental) -----------------

def plan(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    feasible: FeasibleRegion,
    n_new: int,
    budget: Tuple[int, int],
    grid: Grid,
    alpha_weight: Optional[float] = None,
    rth_dbm: Optional[float] = None,
    seed: int = 0,
    step: Optional[float] = None,
    xi: Optional[float] = None,
    tx_power_dbm: Optional[float] = None,
    antenna_gain_db: Optional[float] = None,
    noise: Optional[float] = None,
) -> PlanReport:
    alpha_weight, rth_dbm, tx_power_dbm = _defaults(alpha_weight, rth_dbm, tx_power_dbm)
    q_init, q_bo = budget
    if n_new < 1:
        raise ArgumentError(f"n_new debe ser >= 1 ({n_new})")
    if q_init < 1 or q_bo < 0:
        raise ArgumentError(f"presupuesto inválido (q_init={q_init}, q_bo={q_bo})")
    xi = settings.EI_XI if xi is None else xi
    noise = settings.GP_NOISE if noise is None else noise

    t0 = time.perf_counter()
    pool = _pool(scene, feasible, settings.ES_STEP_M if step is None else step)
    ev = TwinEvaluator(scene, config, params, grid, pool, alpha_weight, rth_dbm, tx_power_dbm, antenna_gain_db)
    x_norm = normalize_positions(scene, np.array([[c.x, c.y] for c in pool]))

    rng = np.random.default_rng(seed)
    state = PlannerState(seed=seed)
    traces: List[BsSearchTrace] = []
    history: List[Metrics] = []

    for n in range(1, n_new + 1):
        state.start_round()
        available = [i for i in range(len(pool)) if i not in state.occupied]
        if not available:
            raise PlanningError(f"no quedan candidatos para la estación {n}")

        seen: Dict[int, Metrics] = {}
        evals: List[Evaluation] = []
        curve: List[float] = []

        def _query(idx: int, phase: str) -> None:
            m = ev.evaluate(idx)
            seen[idx] = m
            state.observe(idx, m.target)
            evals.append(_evaluation(ev, idx, m.target, phase))
            curve.append(state.t_best)

        init = rng.choice(np.array(available), size=min(q_init, len(available)), replace=False)
        for idx in init:
            _query(int(idx), "init")

        obs_idx = [i for i, _ in state.observations]
        obs_y = np.array([v for _, v in state.observations])
        length_scale = select_length_scale(x_norm[obs_idx], obs_y, noise=noise)

        for _ in range(q_bo):
            if len(state.occupied | state.observed()) >= len(pool):
                break
            obs_idx = [i for i, _ in state.observations]
            obs_y = np.array([v for _, v in state.observations])
            model = gp_fit(x_norm[obs_idx], obs_y, length_scale, noise)
            # ξ está en unidades estandarizadas
            idx = select_next(model, x_norm, state, xi * model.y_scale)
            _query(idx, "bo")

        chosen = state.best_observed()
        state.select(chosen)
        ev.commit(chosen)
        history.append(seen[chosen])
        traces.append(BsSearchTrace(
            n=n, evaluations=evals, incumbent_curve=curve, length_scale=length_scale, chosen_index=chosen,
        ))
        logger.info(
            "AutoPlan BS %s/%s: candidato %s (%.1f, %.1f) T=%.4f",
            n, n_new, chosen, pool[chosen].x, pool[chosen].y, seen[chosen].target,
        )

    _check_monotone(history, ev.baseline())

    return PlanReport(
        method="autoplan",
        new_bs=[ev.new_bs(i) for i in state.selected],
        traces=traces,
        committed_metrics=history,
        metrics=history[-1],
        queries=ev.queries,
        candidates=len(pool),
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
    )


# ----------------- Baselines -----------------

def baseline_random(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    feasible: FeasibleRegion,
    n_new: int,
    n_groups: int,
    grid: Grid,
    alpha_weight: Optional[float] = None,
    rth_dbm: Optional[float] = None,
    seed: int = 0,
    step: Optional[float] = None,
    tx_power_dbm: Optional[float] = None,
    antenna_gain_db: Optional[float] = None,
) -> PlanReport:
    alpha_weight, rth_dbm, tx_power_dbm = _defaults(alpha_weight, rth_dbm, tx_power_dbm)
    if n_groups < 1:
        raise ArgumentError(f"n_groups debe ser >= 1 ({n_groups})")
    if n_new < 1:
        raise ArgumentError(f"n_new debe ser >= 1 ({n_new})")

    t0 = time.perf_counter()
    pool = _pool(scene, feasible, settings.ES_STEP_M if step is None else step)
    if len(pool) < n_new:
        raise PlanningError(f"hay {len(pool)} candidatos y se piden {n_new} estaciones")
    ev = TwinEvaluator(scene, config, params, grid, pool, alpha_weight, rth_dbm, tx_power_dbm, antenna_gain_db)

    rng = np.random.default_rng(seed)
    best_group: List[int] = []
    best: Optional[Metrics] = None
    group_targets: List[float] = []
    for g in range(n_groups):
        group = [int(i) for i in rng.choice(len(pool), size=n_new, replace=False)]
        m = ev.evaluate_group(group)
        group_targets.append(m.target)
        if best is None or m.target > best.target:
            best, best_group = m, group

    logger.info("RS: mejor de %s grupos T=%.4f", n_groups, best.target)
    return PlanReport(
        method="random",
        new_bs=[ev.new_bs(i) for i in best_group],
        traces=[BsSearchTrace(
            n=n_new,
            evaluations=[],
            incumbent_curve=[float(v) for v in np.maximum.accumulate(group_targets)],
            chosen_index=int(np.argmax(group_targets)),
        )],
        committed_metrics=[best],
        metrics=best,
        queries=ev.queries,
        candidates=len(pool),
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
    )


def baseline_exhaustive(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    feasible: FeasibleRegion,
    n_new: int,
    step: float,
    grid: Grid,
    alpha_weight: Optional[float] = None,
    rth_dbm: Optional[float] = None,
    tx_power_dbm: Optional[float] = None,
    antenna_gain_db: Optional[float] = None,
) -> PlanReport:
    alpha_weight, rth_dbm, tx_power_dbm = _defaults(alpha_weight, rth_dbm, tx_power_dbm)
    if n_new < 1:
        raise ArgumentError(f"n_new debe ser >= 1 ({n_new})")

    t0 = time.perf_counter()
    pool = _pool(scene, feasible, step)
    if len(pool) < n_new:
        raise PlanningError(f"hay {len(pool)} candidatos y se piden {n_new} estaciones")
    ev = TwinEvaluator(scene, config, params, grid, pool, alpha_weight, rth_dbm, tx_power_dbm, antenna_gain_db)

    traces: List[BsSearchTrace] = []
    history: List[Metrics] = []
    for n in range(1, n_new + 1):
        evals: List[Evaluation] = []
        curve: List[float] = []
        best_idx, best = -1, None
        for idx in range(len(pool)):
            if idx in ev.committed:
                continue
            m = ev.evaluate(idx)
            evals.append(_evaluation(ev, idx, m.target, "exhaustive"))
            if best is None or m.target > best.target:
                best_idx, best = idx, m
            curve.append(best.target)

        ev.commit(best_idx)
        history.append(best)
        traces.append(BsSearchTrace(n=n, evaluations=evals, incumbent_curve=curve, chosen_index=best_idx))
        logger.info("ES BS %s/%s: candidato %s T=%.4f", n, n_new, best_idx, best.target)

    _check_monotone(history, ev.baseline())

    return PlanReport(
        method="exhaustive",
        new_bs=[ev.new_bs(i) for i in ev.committed],
        traces=traces,
        committed_metrics=history,
        metrics=history[-1],
        queries=ev.queries,
        candidates=len(pool),
        wall_time_s=time.perf_counter() - t0,
    )


# ----------------- Comparaciones -----------------

def evaluate_placement(
    scene: Scene,
    config: EngineConfig,
    params: MaterialParams,
    new_bs: Sequence[BaseStation],
    grid: Grid,
    alpha_weight: float,
    rth_dbm: float,
) -> Metrics:
    """Métricas de 𝓑̂ ∪ new_bs bajo `params`."""
    bs_set = list(scene.existing_bs) + list(new_bs)
    return target(solve_radiomap(scene, config, params, bs_set, grid), alpha_weight, rth_dbm)


def placement_overlap(a: Sequence[BaseStation], b: Sequence[BaseStation], radius: float) -> int:
    """Cuántas estaciones de `a` tienen alguna de `b` a distancia (en planta) <= radius."""
    if not a or not b:
        return 0
    pb = np.array([[s.x, s.y] for s in b])
    count = 0
    for s in a:
        if (np.hypot(pb[:, 0] - s.x, pb[:, 1] - s.y) <= radius).any():
            count += 1
    return count


def twin_gap(
    scene: Scene,
    config: EngineConfig,
    calibrated: MaterialParams,
    uncalibrated: MaterialParams,
    calibrated_report: PlanReport,
    grid: Grid,
    alpha_weight: float,
    rth_dbm: float,
    **plan_kwargs,
) -> TwinGapReport:
    """
    Planifica con el gemelo sin calibrar y compara contra el plan calibrado,
    ambos evaluados bajo Θ*.
    """
    raw = plan(
        scene, config, uncalibrated, grid=grid, alpha_weight=alpha_weight, rth_dbm=rth_dbm, **plan_kwargs
    )
    under_cal = evaluate_placement(scene, config, calibrated, raw.new_bs, grid, alpha_weight, rth_dbm)
    gap = under_cal.target - calibrated_report.metrics.target
    base = calibrated_report.metrics.target
    return TwinGapReport(
        calibrated=calibrated_report.metrics,
        uncalibrated_plan_under_calibrated=under_cal,
        uncalibrated_plan_under_uncalibrated=raw.metrics,
        target_gap=gap,
        target_gap_pct=100.0 * gap / base if base else 0.0,
    )


def tx_power_sweep(powers: Sequence[float], **plan_kwargs) -> List[dict]:
    """Cobertura/capacidad/T después de cada estación, para cada potencia."""
    rows: List[dict] = []
    for p in powers:
        report = plan(tx_power_dbm=p, **plan_kwargs)
        for n, m in enumerate(report.committed_metrics, start=1):
            rows.append({
                "tx_power_dbm": p,
                "n_new": n,
                "coverage": m.coverage,
                "capacity": m.capacity,
                "target": m.target,
            })
    return rows
