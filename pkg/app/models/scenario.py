# app/models/scenario.py
#
# Modelo del fichero de escenario (un único JSON legible) y de las filas de
# métricas que produce la simulación.

from decimal import Decimal
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.models.agency import AllocationPolicy, SupplyController
from app.models.choice import AgentProfile
from app.models.flows import CommutePolicy, DeliveryCoefficients, DeliveryModel
from app.models.market import MarketRules
from app.models.network import NetworkState
from app.models.pricing import Mode, PriceSchedule
from app.models.voting import Bundle, Measure


class ReferenceOD(BaseModel):
    """Relación origen-destino de referencia: distancia (km) y duración (min) por modo."""
    distance: dict[str, Decimal]
    duration: dict[str, float]


class PopulationSpec(BaseModel):
    """
    Población sintética (`count`) o explícita (`profiles`). Con `count`, los
    perfiles se generan con un subflujo aleatorio propio a partir de la OD de referencia.
    """
    count: int = Field(default=0, ge=0)
    profiles: Optional[list[AgentProfile]] = None
    distance_sigma: float = Field(default=0.3, ge=0)
    mode_availability: dict[str, float] = Field(default_factory=dict)
    wfh_share: float = Field(default=0.0, ge=0, le=1)
    employed_share: float = Field(default=1.0, ge=0, le=1)
    beta_time: float = Field(default=0.05, gt=0)
    beta_cost: float = Field(default=0.006, gt=0)
    logit_scale: float = Field(default=1.0, gt=0)
    asc: dict[str, float] = Field(default_factory=dict)
    wfh_asc: float = -1.0


class EmployerSpec(BaseModel):
    id: int = Field(ge=0)
    commute_policy: CommutePolicy
    allowance: int = Field(default=0, ge=0)


class MerchantSpec(BaseModel):
    id: int = Field(ge=0)
    delivery_model: DeliveryModel = DeliveryModel()


class DeliverySpec(BaseModel):
    rate_per_person_day: float = Field(default=0.0, ge=0)
    distance: tuple[Decimal, Decimal] = (Decimal(1), Decimal(10))
    weight: tuple[Decimal, Decimal] = (Decimal(0), Decimal(10))
    volume: tuple[Decimal, Decimal] = (Decimal(0), Decimal(50))
    coefficients: DeliveryCoefficients = DeliveryCoefficients()

    @model_validator(mode="after")
    def check_ranges(self):
        for name in ("distance", "weight", "volume"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} range must satisfy 0 <= low <= high")
        return self


class TradingSpec(BaseModel):
    """Heurística de negociación de las personas (umbrales en céntimos de moneda)."""
    buy_below: int = Field(default=0, ge=0)
    buy_up_to: int = Field(default=0, ge=0)
    sell_above: Optional[int] = Field(default=None, ge=0)
    limit_spread: float = Field(default=0.2, ge=0, lt=1)


class CommuteSpec(BaseModel):
    legs_per_day: int = Field(default=2, ge=1)
    occupancy: dict[str, int] = Field(default_factory=dict)
    business_trip_rate: float = Field(default=0.0, ge=0, le=1)
    business_trip_mode: Optional[str] = None
    business_trip_km: Decimal = Field(default=Decimal(0), ge=0)


class VotingSpec(BaseModel):
    mode: Literal["split", "bundle"] = "split"
    budget: Decimal = Field(default=Decimal(0), ge=0)
    measures: list[Measure] = Field(default_factory=list)
    bundles: list[Bundle] = Field(default_factory=list)
    weight_rule: Literal["linear", "sqrt"] = "linear"


class ScenarioConfig(BaseModel):
    name: str = "scenario"
    seed: int = Field(default=0, ge=0)
    horizon_years: int = Field(default=1, ge=1)
    modes: list[Mode] = Field(min_length=1)
    schedule: PriceSchedule
    reference_od: ReferenceOD
    e_max: int = Field(default=0, ge=0)
    market: MarketRules
    allocation: AllocationPolicy
    controller: SupplyController
    network: NetworkState
    population: PopulationSpec = PopulationSpec()
    employers: list[EmployerSpec] = Field(default_factory=list)
    merchants: list[MerchantSpec] = Field(default_factory=list)
    deliveries: DeliverySpec = DeliverySpec()
    trading: TradingSpec = TradingSpec()
    commute: CommuteSpec = CommuteSpec()
    voting: VotingSpec = VotingSpec()

    @property
    def mode_ids(self) -> list[str]:
        return [m.id for m in self.modes]


class MetricsRow(BaseModel):
    day: int
    year: int
    modal_split: dict[str, float]
    clearing_price: Decimal
    market_volume: int = 0
    supply_in_circulation: int
    emissions_g: float = 0.0
    gini: float = 0.0
    forced_purchases: int = 0
    forced_fiat: Decimal = Decimal(0)
    earn_capped: int = 0
    wfh_days: int = 0
    trips: int = 0

    def to_record(self) -> dict:
        record = {"day": self.day, "year": self.year}
        record.update({f"share_{mode}": share for mode, share in self.modal_split.items()})
        record.update({
            "clearing_price": float(self.clearing_price),
            "market_volume_cents": self.market_volume,
            "supply_in_circulation_cents": self.supply_in_circulation,
            "emissions_g": self.emissions_g,
            "gini": self.gini,
            "forced_purchases": self.forced_purchases,
            "forced_fiat_cents": float(self.forced_fiat),
            "earn_capped": self.earn_capped,
            "wfh_days": self.wfh_days,
            "trips": self.trips,
        })
        return record

    @staticmethod
    def columns(mode_ids: list[str]) -> list[str]:
        """Columnas de metrics.csv en orden, también para un fichero sin filas."""
        return (
            ["day", "year"]
            + [f"share_{mode}" for mode in mode_ids]
            + [
                "clearing_price",
                "market_volume_cents",
                "supply_in_circulation_cents",
                "emissions_g",
                "gini",
                "forced_purchases",
                "forced_fiat_cents",
                "earn_capped",
                "wfh_days",
                "trips",
            ]
        )
