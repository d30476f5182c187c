# app/services/flows.py
#
# Liquidación de los casos de desplazamiento al trabajo (i)-(iv), de los viajes
# de empresa y de los dos modelos de reparto, como lotes atómicos del libro.
#
# Precio de reparto:
#   p = redondeo(alpha_d·distancia + alpha_w·peso + alpha_v·volumen)
#
# Cada lote se construye con los abonos primero; si una cuenta no llega a
# cubrir un cargo, la mesa de liquidación antepone una compra forzosa.

import logging
from decimal import Decimal, ROUND_HALF_UP
from enum import Enum
from typing import Optional

from app.models.flows import (
    CommutePolicy,
    DeliveryCoefficients,
    DeliveryModel,
    DeliveryModelKind,
    DeliveryQuery,
    EmploymentContract,
)
from app.models.ledger import AGENCY, AccountId, EventKind, LedgerRecord, Posting
from app.models.market import FiatTransfer, MarketRules, Order, Side
from app.services.market import AgencyReserve, FiatBook, forced_purchase
from app.services.pricing import DailyEarnCap


class DayKind(str, Enum):
    WFH = "Wfh"
    COMMUTE = "Commute"


class SettlementDesk:
    """
    Confirma lotes contra el libro de cuentas. Cuando un cargo supera el
    saldo de quien paga, compra el déficit a la reserva de la Agencia al
    precio vigente (con recargo) antes de confirmar el lote.
    """

    def __init__(
        self,
        ledger,
        rules: MarketRules,
        reserve: AgencyReserve,
        fiat: Optional[FiatBook] = None,
        earn_cap: Optional[DailyEarnCap] = None,
        price: Optional[Decimal] = None,
    ):
        self.ledger = ledger
        self.rules = rules
        self.reserve = reserve
        self.fiat = fiat if fiat is not None else FiatBook()
        self.earn_cap = earn_cap
        self.price = price if price is not None else rules.initial_price
        self.forced_purchases = 0
        self.forced_fiat = Decimal(0)

    def commit(self, day: int, legs: list[Posting], fiat: list[FiatTransfer] = ()) -> list[LedgerRecord]:
        legs = [leg for leg in legs if leg.amount > 0]
        if not legs:
            if fiat:
                self.fiat.record(fiat)
            return []
        running: dict[AccountId, int] = {}
        shortfalls: dict[AccountId, int] = {}
        for leg in legs:
            if leg.source != AGENCY:
                have = running.get(leg.source, self.ledger.balance(leg.source))
                if have < leg.amount:
                    shortfalls[leg.source] = shortfalls.get(leg.source, 0) + leg.amount - have
                    have = leg.amount
                running[leg.source] = have - leg.amount
            running[leg.target] = running.get(leg.target, self.ledger.balance(leg.target)) + leg.amount

        batch: list[Posting] = []
        fiat = list(fiat)
        for account, shortfall in sorted(shortfalls.items()):
            purchase = forced_purchase(account, shortfall, self.price, self.rules, self.reserve)
            batch.extend(purchase.postings)
            fiat.extend(purchase.fiat)
            self.forced_purchases += 1
            self.forced_fiat += sum((t.amount for t in purchase.fiat), Decimal(0))
        batch.extend(legs)
        events = self.ledger.commit_batch(day, batch)
        self.reserve.absorb(events)
        self.fiat.record(fiat)
        return events

    def commit_run(self, day: int, legs: list[Posting]) -> list[LedgerRecord]:
        """Confirma patas de varios agentes que ya se sabe que no necesitan compra forzosa."""
        events = self.ledger.commit_batch(day, legs)
        self.reserve.absorb(events)
        return events

    def credit_earning(self, agent: AccountId, earn: int) -> int:
        if self.earn_cap is None:
            return earn
        return self.earn_cap.credit(agent.index, earn)


def _earn_legs(desk: SettlementDesk, agent: AccountId, trip_price: int, memo: str) -> list[Posting]:
    credited = desk.credit_earning(agent, -trip_price)
    return [Posting(EventKind.TRIP_EARN, AGENCY, agent, credited, memo)]


def settle_commute(
    desk: SettlementDesk,
    day: int,
    agent: AccountId,
    day_kind: DayKind,
    contract: Optional[EmploymentContract],
    trip_price: int = 0,
    memo: str = "",
) -> list[LedgerRecord]:
    """
    Liquida un día de teletrabajo o un trayecto al trabajo ya tarificado:
      (i)   teletrabajo con asignación: empleador -> persona
      (ii)  cobro con billete de empresa: empleador -> persona (reembolso), persona -> Agencia
      (iii) cobro sin reembolso: persona -> Agencia
      (iv)  modo que hace ganar: Agencia -> persona, sujeto al tope diario
    Sin contrato, la persona liquida como en (iii) y (iv).
    """
    if day_kind == DayKind.WFH:
        if contract is not None and contract.commute_policy == CommutePolicy.WFH_ALLOWANCE and contract.allowance > 0:
            return desk.commit(day, [Posting(EventKind.ALLOWANCE, contract.employer, agent, contract.allowance, memo or "wfh")])
        return []

    if trip_price < 0:
        return desk.commit(day, _earn_legs(desk, agent, trip_price, memo))
    if trip_price == 0:
        return []
    if contract is not None and contract.commute_policy == CommutePolicy.JOB_TICKET:
        legs = [
            Posting(EventKind.REIMBURSEMENT, contract.employer, agent, trip_price, memo),
            Posting(EventKind.TRIP_CHARGE, agent, AGENCY, trip_price, memo),
        ]
    else:
        legs = [Posting(EventKind.TRIP_CHARGE, agent, AGENCY, trip_price, memo)]
    return desk.commit(day, legs)


def settle_business_trip(
    desk: SettlementDesk,
    day: int,
    agent: AccountId,
    trip_price: int,
    contract: EmploymentContract,
    memo: str = "",
) -> list[LedgerRecord]:
    """Los viajes de empresa se reembolsan siempre, como en el caso (ii), sea cual sea la política."""
    if trip_price < 0:
        return desk.commit(day, _earn_legs(desk, agent, trip_price, memo))
    if trip_price == 0:
        return []
    legs = [
        Posting(EventKind.REIMBURSEMENT, contract.employer, agent, trip_price, memo or "business"),
        Posting(EventKind.TRIP_CHARGE, agent, AGENCY, trip_price, memo or "business"),
    ]
    return desk.commit(day, legs)


def delivery_price(q: DeliveryQuery, coeffs: DeliveryCoefficients) -> int:
    """Precio del reparto en céntimos de moneda (lineal en distancia, peso y volumen)."""
    raw = coeffs.alpha_d * q.distance + coeffs.alpha_w * q.weight + coeffs.alpha_v * q.volume
    return int(raw.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def settle_delivery(
    desk: SettlementDesk,
    day: int,
    q: DeliveryQuery,
    model: DeliveryModel,
    coeffs: DeliveryCoefficients,
    memo: str = "",
) -> list[LedgerRecord]:
    """
    (i)  el cliente paga el precio del reparto a la Agencia;
    (ii) el cliente paga una tarifa plana fiat al comercio y el comercio paga el precio a la Agencia.
    En ambos casos la Agencia recibe las mismas monedas.
    """
    price = delivery_price(q, coeffs)
    if model.kind == DeliveryModelKind.CUSTOMER_PAYS:
        legs = [Posting(EventKind.DELIVERY_CHARGE, q.customer, AGENCY, price, memo)]
        return desk.commit(day, legs)
    legs = [Posting(EventKind.DELIVERY_CHARGE, q.merchant, AGENCY, price, memo)]
    fiat = []
    if model.flat_fiat > 0:
        fiat.append(FiatTransfer(payer=q.customer, payee=q.merchant, amount=model.flat_fiat, kind="delivery_flat_rate"))
    return desk.commit(day, legs, fiat)


def employer_replenishment(
    account: AccountId,
    balance: int,
    expected_outflow: int,
    rules: MarketRules,
    order_id: int,
    day: int = 0,
) -> Optional[Order]:
    """
    Orden de compra para que un empleador (o un comercio) siga siendo solvente:
    max(0, salida esperada - saldo) al precio techo. El recorte por límites lo hace el mercado.
    """
    quantity = max(0, expected_outflow - balance)
    if quantity == 0:
        return None
    logging.debug(f"Replenishment order for {account}: {quantity} cents")
    return Order(id=order_id, account=account, side=Side.BUY, quantity=quantity, limit=rules.price_cap, day=day)
