# app/models/market.py
#
# Modelos del mercado regulado de MobilityCoins (subasta de precio uniforme).
# Cantidades en céntimos de moneda; precios en céntimos fiat por moneda (Decimal).

from decimal import Decimal
from enum import Enum

from pydantic import BaseModel, Field, model_validator

from app.models.ledger import AccountRef


class Side(str, Enum):
    BUY = "Buy"
    SELL = "Sell"


class Order(BaseModel):
    id: int = Field(ge=0)
    account: AccountRef
    side: Side
    quantity: int = Field(gt=0)
    limit: Decimal = Field(gt=0)
    day: int = Field(default=0, ge=0)


class MarketRules(BaseModel):
    price_floor: Decimal = Field(gt=0)
    price_cap: Decimal = Field(gt=0)
    buy_limit: int = Field(ge=0)             # céntimos por cuenta y sesión
    sell_limit: int = Field(ge=0)
    fee_rate: Decimal = Field(default=Decimal(0), ge=0, lt=1)
    penalty_rate: Decimal = Field(default=Decimal(0), ge=0)
    session_every: int = Field(default=7, ge=1)
    lot_cents: int = Field(default=100, ge=1)
    initial_price: Decimal = Field(gt=0)
    # Reserva inicial vendible de la Agencia y venta propia por sesión.
    agency_reserve: int = Field(default=0, ge=0)
    agency_sell_per_session: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_band(self):
        if self.price_floor > self.price_cap:
            raise ValueError("price_floor must not exceed price_cap")
        return self

    def clamp(self, price: Decimal) -> Decimal:
        return min(max(price, self.price_floor), self.price_cap)


class Fill(BaseModel):
    order_id: int
    account: AccountRef
    side: Side
    quantity: int = Field(ge=0)


class FiatTransfer(BaseModel):
    payer: AccountRef
    payee: AccountRef
    amount: Decimal = Field(ge=0)     # céntimos fiat
    kind: str


class ClearingResult(BaseModel):
    day: int = 0
    clearing_price: Decimal
    volume: int = Field(ge=0)
    fills: list[Fill] = Field(default_factory=list)
    fees_collected: int = Field(default=0, ge=0)
    fiat_transfers: list[FiatTransfer] = Field(default_factory=list)
    n_orders: int = 0

    def filled(self, order_id: int) -> int:
        for fill in self.fills:
            if fill.order_id == order_id:
                return fill.quantity
        return 0
