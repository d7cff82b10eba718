# schemas/config.py
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError
from core.propagation import EngineConfig
from core.scene import FeasibleRegion
from core.settings import settings


class RunConfig(BaseModel):
    """
    Configuración de una corrida. Capas: Settings (env/.env) ← JSON de --config
    ← flags no nulos de la CLI.
    """

    model_config = ConfigDict(extra="forbid")

    # ---- Paths ----
    scene: Optional[str] = None
    measurements: Optional[str] = None
    out_dir: str = "out"

    # ---- Métricas ----
    grid_res_m: float = Field(default_factory=lambda: settings.GRID_RES_M, gt=0)
    rth_dbm: float = Field(default_factory=lambda: settings.RTH_DBM)
    alpha_weight: float = Field(default_factory=lambda: settings.ALPHA_WEIGHT, gt=0)

    # ---- Estaciones nuevas ----
    n_new: int = Field(default_factory=lambda: settings.N_NEW, ge=1)
    tx_power_dbm: float = Field(default_factory=lambda: settings.TX_POWER_DBM)
    tx_power_list: Optional[List[float]] = None
    antenna_gain_db: float = Field(default_factory=lambda: settings.ANTENNA_GAIN_DB)
    rooftops: bool = True
    feasible_polygons: List[List[Tuple[float, float]]] = []
    mount_offset_m: float = Field(default_factory=lambda: settings.MOUNT_OFFSET_M, ge=0)
    mast_height_m: float = Field(default_factory=lambda: settings.MAST_HEIGHT_M, gt=0)

    # ---- BO ----
    budget_init: int = Field(default_factory=lambda: settings.BUDGET_INIT, ge=1)
    budget_bo: int = Field(default_factory=lambda: settings.BUDGET_BO, ge=0)
    ei_xi: float = Field(default_factory=lambda: settings.EI_XI, ge=0)
    gp_noise: float = Field(default_factory=lambda: settings.GP_NOISE, gt=0)

    # ---- Baselines ----
    es_step_m: float = Field(default_factory=lambda: settings.ES_STEP_M, gt=0)
    rs_groups: int = Field(default_factory=lambda: settings.RS_GROUPS, ge=1)

    # ---- Calibración ----
    lr: float = Field(default_factory=lambda: settings.LR, gt=0)
    epochs: int = Field(default_factory=lambda: settings.EPOCHS, ge=1)
    optimizer: Literal["sgd", "adam"] = Field(default_factory=lambda: settings.OPTIMIZER)
    batch_size: int = Field(default_factory=lambda: settings.BATCH_SIZE, ge=0)
    init: Literal["auto", "labels", "scene", "random"] = "auto"

    seed: int = Field(default_factory=lambda: settings.SEED, ge=0)

    engine: EngineConfig = Field(default_factory=EngineConfig)

    @field_validator("optimizer", mode="before")
    @classmethod
    def _lower(cls, v):
        return v.strip().lower() if isinstance(v, str) else v

    @model_validator(mode="after")
    def _tx_bounds(self):
        lo, hi = settings.TX_POWER_MIN_DBM, settings.TX_POWER_MAX_DBM
        for p in [self.tx_power_dbm, *(self.tx_power_list or [])]:
            if not lo <= p <= hi:
                raise ValueError(f"tx_power {p} dBm fuera de [{lo}, {hi}]")
        return self

    @property
    def budget(self) -> Tuple[int, int]:
        return self.budget_init, self.budget_bo

    def feasible(self) -> FeasibleRegion:
        return FeasibleRegion(
            rooftops=self.rooftops,
            polygons=tuple(tuple(tuple(v) for v in poly) for poly in self.feasible_polygons),
            mount_offset=self.mount_offset_m,
            mast_height=self.mast_height_m,
        )


def _config_detail(exc: ValidationError) -> str:
    err = exc.errors()[0]
    loc = ".".join(str(p) for p in err.get("loc", ())) or "config"
    return f"config inválida: {loc}: {err.get('msg')}"


def load_run_config(path: Optional[str | Path] = None, overrides: Optional[dict] = None) -> RunConfig:
    data: dict = {}
    if path:
        p = Path(path)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"no existe el archivo de config: {p}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config mal formada ({p}): {exc.msg} en línea {exc.lineno}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config mal formada ({p}): se esperaba un objeto JSON")

    # ✅ los flags sólo pisan lo que vino explícito
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_config_detail(exc)) from exc
