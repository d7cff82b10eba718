# core/settings.py
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # -----------------------------
    # Métricas de planificación
    # -----------------------------
    GRID_RES_M: float = 2.0        # resolución a del grid (m)
    RTH_DBM: float = -90.0         # umbral de cobertura r_th
    ALPHA_WEIGHT: float = 10.0     # peso de cobertura en T = α·C + S

    # -----------------------------
    # Estaciones base nuevas
    # -----------------------------
    N_NEW: int = 5
    TX_POWER_DBM: float = 43.0
    TX_POWER_MIN_DBM: float = 0.0
    TX_POWER_MAX_DBM: float = 50.0
    ANTENNA_GAIN_DB: float = 0.0
    MOUNT_OFFSET_M: float = 2.0    # altura sobre la azotea
    MAST_HEIGHT_M: float = 10.0    # mástil en polígonos explícitos (no azotea)

    # -----------------------------
    # Optimización bayesiana / baselines
    # -----------------------------
    BUDGET_INIT: int = 10
    BUDGET_BO: int = 30
    EI_XI: float = 0.01            # en unidades estandarizadas
    GP_NOISE: float = 1e-6
    ES_STEP_M: float = 5.0
    RS_GROUPS: int = 100

    # -----------------------------
    # Calibración del gemelo
    # -----------------------------
    EPOCHS: int = 300
    LR: float = 0.01
    OPTIMIZER: str = "adam"
    BATCH_SIZE: int = 0            # 0 => batch completo (P)

    # -----------------------------
    # Motor de propagación
    # -----------------------------
    WALL_THICKNESS_M: float = 0.3
    MIN_DISTANCE_M: float = 1.0
    NOISE_FLOOR_DBM: float = -94.0
    RX_HEIGHT_M: float = 1.5
    CARRIER_FREQ_HZ: float = 3.5e9

    SEED: int = 0

    # Registro de corridas. Vacío => sqlite dentro de --out-dir
    RUNS_DB_URL: str = ""

    LOG_LEVEL: str = "INFO"

    # Configuración de Pydantic Settings (v2)
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
