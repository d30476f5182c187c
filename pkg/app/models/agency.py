# app/models/agency.py
#
# Política de asignación anual y controlador de la oferta de monedas.

from decimal import Decimal

from pydantic import BaseModel, Field, model_validator


class AllocationPolicy(BaseModel):
    base_per_person: int = Field(ge=0)          # céntimos por año
    low_access_bonus: int = Field(default=0, ge=0)
    low_access_threshold: int = Field(default=0, ge=0)
    period: int = Field(default=365, ge=1)      # días
    # Si es False, los saldos personales pasan al año siguiente.
    expire_at_year_end: bool = True


class SupplyController(BaseModel):
    target_split: dict[str, Decimal]
    gain: Decimal = Field(default=Decimal("0.5"), ge=0)
    max_rel_change: Decimal = Field(default=Decimal("0.2"), gt=0, le=1)
    controlled_mode: str = "car"

    @model_validator(mode="after")
    def check_split(self):
        for mode, share in self.target_split.items():
            if not 0 <= share <= 1:
                raise ValueError(f"target share of '{mode}' must be in [0, 1]")
        if abs(sum(self.target_split.values()) - 1) > Decimal("1e-9"):
            raise ValueError("target_split shares must sum to 1")
        return self
