# app/models/flows.py
#
# Contratos de empleo y modelos de reparto para los flujos de liquidación.

from decimal import Decimal
from enum import Enum
from typing import Literal

from pydantic import BaseModel, Field

from app.models.ledger import AccountRef


class CommutePolicy(str, Enum):
    WFH_ALLOWANCE = "WfhAllowance"
    JOB_TICKET = "JobTicket"
    NO_REIMBURSEMENT = "NoReimbursement"


class EmploymentContract(BaseModel):
    employer: AccountRef
    commute_policy: CommutePolicy
    allowance: int = Field(default=0, ge=0)     # céntimos por día de teletrabajo
    business_trips_reimbursed: Literal[True] = True


class DeliveryQuery(BaseModel):
    distance: Decimal = Field(ge=0)     # km
    weight: Decimal = Field(ge=0)       # kg
    volume: Decimal = Field(ge=0)       # litros
    customer: AccountRef
    merchant: AccountRef


class DeliveryModelKind(str, Enum):
    CUSTOMER_PAYS = "CustomerPays"
    MERCHANT_FLAT_RATE = "MerchantFlatRate"


class DeliveryModel(BaseModel):
    kind: DeliveryModelKind = DeliveryModelKind.CUSTOMER_PAYS
    flat_fiat: Decimal = Field(default=Decimal(0), ge=0)     # céntimos fiat


class DeliveryCoefficients(BaseModel):
    """Coeficientes del precio de reparto, en céntimos de moneda por unidad."""
    alpha_d: Decimal = Field(default=Decimal(0), ge=0)   # por km
    alpha_w: Decimal = Field(default=Decimal(0), ge=0)   # por kg
    alpha_v: Decimal = Field(default=Decimal(0), ge=0)   # por litro
