# app/models/choice.py
#
# Modelos de la elección modal previa al viaje.

from decimal import Decimal
from typing import Optional

from pydantic import BaseModel, Field, model_validator

from app.models.ledger import AccountKind, AccountRef


class AgentProfile(BaseModel):
    """
    Parámetros de comportamiento de un viajero para su relación casa-trabajo.
    `available_modes` conserva el orden de modos del escenario.
    """
    account: AccountRef
    available_modes: list[str] = Field(min_length=1)
    od_distance: dict[str, Decimal]          # km por modo
    od_duration_base: dict[str, float]       # minutos por modo, flujo libre
    beta_time: float = Field(gt=0)           # utilidad por minuto
    beta_cost: float = Field(gt=0)           # utilidad por céntimo fiat
    asc: dict[str, float] = Field(default_factory=dict)
    logit_scale: float = Field(default=1.0, gt=0)
    wfh_eligible: bool = False
    employer: Optional[AccountRef] = None

    @model_validator(mode="after")
    def check_profile(self):
        if self.account.kind != AccountKind.PERSON:
            raise ValueError("profiles belong to person accounts")
        if len(set(self.available_modes)) != len(self.available_modes):
            raise ValueError("available_modes has duplicates")
        for mode in self.available_modes:
            if mode not in self.od_distance or mode not in self.od_duration_base:
                raise ValueError(f"mode '{mode}' lacks od_distance or od_duration_base")
        if self.employer is not None and self.employer.kind != AccountKind.EMPLOYER:
            raise ValueError("employer must be an employer account")
        return self


class ModeOption(BaseModel):
    coin_price: int            # céntimos de moneda, con signo
    travel_time: float = Field(ge=0)   # minutos


class ChoiceContext(BaseModel):
    options: dict[str, ModeOption]
    market_price: Decimal = Field(gt=0)    # céntimos fiat por moneda
