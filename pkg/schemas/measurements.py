# schemas/measurements.py
from typing import Optional

from pydantic import BaseModel, field_validator


class MeasurementRow(BaseModel):
    """Una fila del CSV `x,y,rsrp_dbm[,bs_index]`."""

    x: float
    y: float
    rsrp_dbm: float
    bs_index: Optional[int] = None

    @field_validator("bs_index", mode="before")
    @classmethod
    def _blank_is_none(cls, v):
        # celda vacía => la asociación se resuelve por mejor RSRP simulada
        if v is None or (isinstance(v, str) and not v.strip()):
            return None
        return v
