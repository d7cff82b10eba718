# schemas/reports.py
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from schemas.scene import BaseStation, Materials


class Metrics(BaseModel):
    coverage: float = Field(ge=0.0, le=1.0)
    capacity: float = Field(ge=0.0)      # bit/s/Hz
    target: float
    alpha_weight: float
    rth_dbm: float


class CalibrationReport(BaseModel):
    loss_curve: List[float]
    initial_loss: float
    final_loss: float
    theta_star: Materials
    theta_init: Materials
    # cruces por material sobre todas las mediciones (observabilidad)
    crossings_per_material: List[int]
    # ✅ trayectorias por época (curvas de σ y ε)
    sigma_history: List[List[float]] = []
    epsilon_history: List[List[float]] = []
    optimizer: str
    learning_rate: float
    epochs: int
    batch_size: int


class Evaluation(BaseModel):
    candidate_index: int
    x: float
    y: float
    target: float
    phase: str           # "init" | "bo" | "exhaustive" | "random"


class BsSearchTrace(BaseModel):
    n: int
    evaluations: List[Evaluation] = []
    incumbent_curve: List[float] = []
    length_scale: Optional[float] = None
    chosen_index: int


class PlanReport(BaseModel):
    method: str          # "autoplan" | "random" | "exhaustive"
    new_bs: List[BaseStation]
    traces: List[BsSearchTrace] = []
    committed_metrics: List[Metrics] = []
    metrics: Metrics
    queries: int
    candidates: int
    seed: Optional[int] = None
    # ⚠️ no es salida primaria: se excluye al escribir el JSON (va al manifest)
    wall_time_s: float = 0.0


class TwinGapReport(BaseModel):
    calibrated: Metrics
    uncalibrated_plan_under_calibrated: Metrics
    uncalibrated_plan_under_uncalibrated: Metrics
    target_gap: float
    target_gap_pct: float


class OutputFile(BaseModel):
    path: str
    sha256: str


class RunManifest(BaseModel):
    command: str
    seed: Optional[int] = None
    config: dict
    # argumentos propios del subcomando (n_points, size, bs_set, ...)
    arguments: dict = {}
    inputs: List[OutputFile] = []
    outputs: List[OutputFile] = []
    versions: Dict[str, str] = {}
    timings: Dict[str, float] = {}
    drt_queries: Dict[str, int] = {}
    metrics: dict = {}


class MethodRow(BaseModel):
    method: str
    coverage: float
    capacity: float
    target: float
    queries: int


class BaselineSummary(BaseModel):
    rows: List[MethodRow]
    # T_plan / T_ES y consultas_plan / consultas_ES
    target_ratio: float
    query_ratio: float
    overlap_radius_m: float
    overlap_with_es: int
