# schemas/scene.py
"""Formato JSON de la escena (entrada/salida de gen-scene, plan, map...)."""
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Region(BaseModel):
    model_config = ConfigDict(frozen=True)

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @model_validator(mode="after")
    def _non_empty(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("región vacía: se requiere xmax > xmin e ymax > ymin")
        return self

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height


class Building(BaseModel):
    model_config = ConfigDict(frozen=True)

    footprint: Tuple[Tuple[float, float], ...]
    height_m: float
    material_index: int


class BaseStation(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    z: float = Field(gt=0)
    tx_power_dbm: float
    antenna_gain_db: float = 0.0


class Materials(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: Tuple[float, ...] = ()
    epsilon: Tuple[float, ...] = ()
    # ✅ opcional: etiquetas ("concrete", "brick", ...) => valores canónicos al calibrar
    labels: Optional[Tuple[str, ...]] = None


class SceneFile(BaseModel):
    region: Region
    carrier_freq_hz: float = Field(gt=0)
    rx_height_m: float = Field(gt=0)
    buildings: Tuple[Building, ...] = ()
    existing_bs: Tuple[BaseStation, ...] = ()
    materials: Materials = Materials()
