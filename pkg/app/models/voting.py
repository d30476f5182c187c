# app/models/voting.py
#
# Modelos de la votación de infraestructuras de fin de año.

from decimal import Decimal
from enum import Enum
from typing import Optional, Union

from pydantic import BaseModel, Field, model_validator

from app.models.ledger import AccountRef


class EffectParameter(str, Enum):
    TRAVEL_TIME_FACTOR = "travel_time_factor"
    CAPACITY_FACTOR = "capacity_factor"
    AVAILABILITY = "availability"


class MeasureEffect(BaseModel):
    mode: str
    parameter: EffectParameter
    value: Union[bool, float]

    @model_validator(mode="after")
    def check_value(self):
        if self.parameter == EffectParameter.AVAILABILITY:
            if not isinstance(self.value, bool):
                raise ValueError("availability effects take a boolean")
        elif isinstance(self.value, bool) or self.value <= 0:
            raise ValueError("factor effects take a positive multiplier")
        return self

    @property
    def improves(self) -> bool:
        """El efecto mejora el modo (menos tiempo, más capacidad o nueva disponibilidad)."""
        if self.parameter == EffectParameter.AVAILABILITY:
            return self.value is True
        if self.parameter == EffectParameter.TRAVEL_TIME_FACTOR:
            return self.value < 1
        return self.value > 1


class Measure(BaseModel):
    id: int = Field(ge=0)
    label: str
    cost: Decimal = Field(gt=0)
    effects: list[MeasureEffect] = Field(default_factory=list)


class Bundle(BaseModel):
    id: int = Field(ge=0)
    measures: list[int] = Field(min_length=1)


class Ballot(BaseModel):
    voter: AccountRef
    weight: int = Field(ge=0)
    split: Optional[dict[int, Decimal]] = None
    bundle: Optional[int] = None

    @model_validator(mode="after")
    def check_ballot(self):
        if self.split is not None:
            for fraction in self.split.values():
                if not 0 <= fraction <= 1:
                    raise ValueError("split fractions must be in [0, 1]")
            if sum(self.split.values()) > 1:
                raise ValueError("split fractions must sum to at most 1")
        return self
