# app/models/network.py
#
# Modelo mínimo de oferta por modo para la relación origen-destino de referencia.

from decimal import Decimal
from typing import Optional

from pydantic import BaseModel, Field, model_validator


class ModeSupply(BaseModel):
    base_time: float = Field(gt=0)                  # minutos, flujo libre
    congestible: bool = False
    capacity: Optional[float] = Field(default=None, gt=0)    # viajes/día
    travel_time_factor: float = Field(default=1.0, gt=0)
    capacity_factor: float = Field(default=1.0, gt=0)
    alpha: float = Field(default=0.15, ge=0)
    beta: float = Field(default=4.0, ge=0)
    available: bool = True

    @model_validator(mode="after")
    def check_capacity(self):
        if self.congestible and self.capacity is None:
            raise ValueError("congestible modes need a capacity")
        return self

    @property
    def free_flow_time(self) -> float:
        return self.base_time * self.travel_time_factor


class NetworkState(BaseModel):
    modes: dict[str, ModeSupply]
    c_max: Decimal = Field(default=Decimal(3), ge=1)
