# app/models/pricing.py
#
# Modelos de tarificación: modos de transporte, estado del tráfico,
# tabla de precios por modo y la consulta previa al viaje.

from decimal import Decimal
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.ledger import AccountRef


class ModeKind(str, Enum):
    CAR = "car"
    BUS = "bus"
    RAIL = "rail"
    BIKE = "bike"
    WALK = "walk"
    CUSTOM = "custom"


class Mode(BaseModel):
    id: str = Field(min_length=1, max_length=16)
    kind: ModeKind = ModeKind.CUSTOM
    # gCO2 por persona-km; solo para informes.
    emission_factor: Decimal = Field(default=Decimal(0), ge=0)


class TrafficState(BaseModel):
    model_config = ConfigDict(frozen=True)

    # 1 = flujo libre
    congestion_multiplier: Decimal = Field(default=Decimal(1), ge=1)


FREE_FLOW = TrafficState()


class ModeRate(BaseModel):
    """
    Tarifa de un modo. Tasas en céntimos de moneda por km y por minuto;
    negativas para los modos que hacen ganar monedas.
    """
    rate_dist: Decimal = Decimal(0)
    rate_time: Decimal = Decimal(0)
    congestion_applies: bool = False
    occupancy_divides: bool = False

    @property
    def is_earning(self) -> bool:
        return self.rate_dist < 0 or self.rate_time < 0

    @property
    def is_charged(self) -> bool:
        return self.rate_dist > 0 or self.rate_time > 0

    @model_validator(mode="after")
    def check_signs(self):
        if self.is_earning and self.is_charged:
            raise ValueError("rate_dist and rate_time must not have opposite signs")
        if self.is_earning and (self.congestion_applies or self.occupancy_divides):
            raise ValueError("earning modes cannot scale with congestion or occupancy")
        return self


class PriceSchedule(BaseModel):
    rates: dict[str, ModeRate]

    def earning_modes(self) -> list[str]:
        return [mode for mode, rate in self.rates.items() if rate.is_earning]

    def charged_modes(self) -> list[str]:
        return [mode for mode, rate in self.rates.items() if rate.is_charged]


class TripQuery(BaseModel):
    mode: str
    distance: Decimal = Field(ge=0)     # km
    duration: Decimal = Field(ge=0)     # minutos
    occupancy: int = Field(default=1, ge=1)
    traffic: TrafficState = FREE_FLOW

    @model_validator(mode="after")
    def check_not_empty(self):
        if self.distance == 0 and self.duration == 0:
            raise ValueError("a priced trip needs a distance or a duration")
        return self


class EarnCapState(BaseModel):
    agent: AccountRef
    day: int = Field(ge=0)
    earned_today: int = Field(default=0, ge=0)
