# app/services/market.py
#
# Mercado regulado de MobilityCoins: subasta periódica de precio uniforme con
# banda de precios, límites por persona y sesión, comisión y compra forzosa.
#
# Cierre de sesión:
#   precios candidatos = límites de las órdenes ∪ {suelo, techo}
#   demanda(p) = sum compras con límite >= p ; oferta(p) = sum ventas con límite <= p
#   volumen(p) = min(demanda, oferta)
#   precio = argmax volumen; desempate por |p - precio_anterior| mínimo y después p menor.
#   El lado largo se raciona a prorrata en lotes (mayor resto, empate por id de orden).

import bisect
import logging
import math
from collections import defaultdict
from decimal import Decimal, ROUND_HALF_UP
from typing import NamedTuple, Optional

from app.exceptions import EmptyAgencyReserve, SessionClosed, UnbackedSell, UnknownAccount
from app.models.ledger import AGENCY, CENTS_PER_COIN, AccountId, EventKind, Posting
from app.models.market import ClearingResult, FiatTransfer, Fill, MarketRules, Order, Side

_FIAT_QUANTUM = Decimal("0.01")


class AgencyReserve:
    """
    Monedas que la Agencia puede vender (compras forzosas y órdenes propias).
    Crece con cada moneda que vuelve a la Agencia por cobros, comisiones o caducidad.
    """

    RETURN_KINDS = frozenset({
        EventKind.TRIP_CHARGE,
        EventKind.DELIVERY_CHARGE,
        EventKind.TRANSACTION_FEE,
        EventKind.PENALTY,
        EventKind.EXPIRY,
    })

    def __init__(self, initial: int = 0):
        self.available = initial

    def draw(self, amount: int):
        if amount > self.available:
            raise EmptyAgencyReserve(amount, self.available)
        self.available -= amount

    def absorb(self, events):
        """Suma a la reserva las monedas devueltas a la Agencia en un lote confirmado."""
        for event in events:
            if event.target == AGENCY and event.kind in self.RETURN_KINDS:
                self.available += event.amount_cents


class FiatBook:
    """Contabilidad paralela en céntimos fiat (fuera del libro de monedas)."""

    def __init__(self):
        self.net: dict[AccountId, Decimal] = defaultdict(Decimal)
        self.by_kind: dict[str, Decimal] = defaultdict(Decimal)

    def record(self, transfers):
        for t in transfers:
            self.net[t.payer] -= t.amount
            self.net[t.payee] += t.amount
            self.by_kind[t.kind] += t.amount


class OrderBook:
    """Libro de una sesión. Las órdenes se envían en serie y se congela al cerrar."""

    def __init__(self, day: int = 0):
        self.day = day
        self.orders: list[Order] = []
        self.bought: dict[AccountId, int] = defaultdict(int)
        self.sold: dict[AccountId, int] = defaultdict(int)
        self.reserved: dict[AccountId, int] = defaultdict(int)
        self.is_open = True
        self._next_id = 0

    def next_order_id(self) -> int:
        order_id = self._next_id
        self._next_id += 1
        return order_id

    def close(self) -> tuple[Order, ...]:
        self.is_open = False
        return tuple(self.orders)


def fee_allowance(quantity: int, rules: MarketRules) -> int:
    """Monedas reservadas para la comisión de una venta (holgura de un céntimo por redondeo)."""
    if rules.fee_rate == 0:
        return 0
    return math.ceil(rules.fee_rate * quantity) + 1


def backed_quantity(quantity: int, available: int, rules: MarketRules) -> int:
    """Mayor cantidad en lotes, hasta `quantity`, cuya venta y comisión caben en `available`."""
    lot = rules.lot_cents
    if rules.fee_rate > 0:
        quantity = min(quantity, int((available - 1) / (1 + rules.fee_rate)))
    quantity = (max(quantity, 0) // lot) * lot
    while quantity > 0 and quantity + fee_allowance(quantity, rules) > available:
        quantity -= lot
    return quantity


def submit_order(order: Order, rules: MarketRules, book: OrderBook, ledger, reserve: Optional[AgencyReserve] = None) -> Optional[Order]:
    """
    Acepta una orden en el libro, recortada a lotes enteros y al límite por
    cuenta y sesión, con el precio límite dentro de la banda [suelo, techo].
    Las ventas quedan respaldadas (reservadas) hasta el cierre.

    Returns:
        La orden aceptada, o None si el recorte la deja a cero.
    """
    if not book.is_open:
        raise SessionClosed(f"session of day {book.day} is closed")
    if not ledger.has_account(order.account):
        raise UnknownAccount(order.account)

    lot = rules.lot_cents
    quantity = order.quantity
    is_agency = order.account == AGENCY
    if not is_agency:
        if order.side == Side.BUY:
            quantity = min(quantity, rules.buy_limit - book.bought[order.account])
        else:
            quantity = min(quantity, rules.sell_limit - book.sold[order.account])
    quantity = (max(quantity, 0) // lot) * lot
    if quantity == 0:
        return None

    if order.side == Side.SELL:
        if is_agency:
            available = (reserve.available if reserve else 0) - book.reserved[AGENCY]
            if available < quantity:
                raise EmptyAgencyReserve(quantity, available)
            book.reserved[AGENCY] += quantity
        else:
            available = ledger.balance(order.account) - book.reserved[order.account]
            if available < quantity:
                raise UnbackedSell(order.account, order.quantity, available)
            # Se recorta la venta para dejar holgura a la comisión.
            quantity = backed_quantity(quantity, available, rules)
            if quantity == 0:
                return None
            needed = quantity + fee_allowance(quantity, rules)
            book.reserved[order.account] += needed
        book.sold[order.account] += quantity
    else:
        book.bought[order.account] += quantity

    accepted = order.model_copy(update={"quantity": quantity, "limit": rules.clamp(order.limit)})
    book.orders.append(accepted)
    return accepted


def _ration(orders: list[Order], volume: int, lot: int) -> dict[int, int]:
    """Reparto a prorrata en lotes con el método del mayor resto."""
    lots = {o.id: o.quantity // lot for o in orders}
    total = sum(lots.values())
    target = volume // lot
    if total <= target:
        return {o.id: o.quantity for o in orders}
    shares = {}
    remainders = []
    for o in orders:
        base, rem = divmod(target * lots[o.id], total)
        shares[o.id] = base
        remainders.append((-rem, o.id))
    leftover = target - sum(shares.values())
    for _, order_id in sorted(remainders)[:leftover]:
        shares[order_id] += 1
    return {order_id: n * lot for order_id, n in shares.items()}


def _split_fee(total_fee: int, fills: list[tuple[int, AccountId, int]]) -> dict[int, int]:
    """Reparte la comisión entre vendedores a prorrata de su ejecución (mayor resto en céntimos)."""
    base_total = sum(q for _, _, q in fills)
    if total_fee == 0 or base_total == 0:
        return {}
    shares = {}
    remainders = []
    for order_id, _, quantity in fills:
        base, rem = divmod(total_fee * quantity, base_total)
        shares[order_id] = base
        remainders.append((-rem, order_id))
    leftover = total_fee - sum(shares.values())
    for _, order_id in sorted(remainders)[:leftover]:
        shares[order_id] += 1
    return shares


def clear_session(book, rules: MarketRules, prev_price: Decimal) -> ClearingResult:
    """
    Cierra la sesión. Función pura del libro congelado:
    libros y reglas idénticos producen resultados idénticos.
    """
    orders = list(book.orders) if isinstance(book, OrderBook) else list(book)
    day = book.day if isinstance(book, OrderBook) else 0
    buys = sorted((o for o in orders if o.side == Side.BUY), key=lambda o: o.id)
    sells = sorted((o for o in orders if o.side == Side.SELL), key=lambda o: o.id)

    # Sumas acumuladas para evaluar demanda y oferta en O(log n) por candidato.
    buy_sorted = sorted(buys, key=lambda o: o.limit)
    buy_limits = [o.limit for o in buy_sorted]
    buy_suffix = [0] * (len(buy_sorted) + 1)
    for i in range(len(buy_sorted) - 1, -1, -1):
        buy_suffix[i] = buy_suffix[i + 1] + buy_sorted[i].quantity
    sell_sorted = sorted(sells, key=lambda o: o.limit)
    sell_limits = [o.limit for o in sell_sorted]
    sell_prefix = [0]
    for o in sell_sorted:
        sell_prefix.append(sell_prefix[-1] + o.quantity)

    # El precio de cierre siempre queda dentro de la banda: los límites fuera de ella no son candidatos.
    candidates = sorted(
        {o.limit for o in orders if rules.price_floor <= o.limit <= rules.price_cap}
        | {rules.price_floor, rules.price_cap}
    )
    best_key = None
    best_price = rules.clamp(prev_price)
    best_volume = 0
    for p in candidates:
        demand = buy_suffix[bisect.bisect_left(buy_limits, p)]
        supply = sell_prefix[bisect.bisect_right(sell_limits, p)]
        volume = min(demand, supply)
        key = (-volume, abs(p - prev_price), p)
        if best_key is None or key < best_key:
            best_key, best_price, best_volume = key, p, volume

    if best_volume == 0:
        return ClearingResult(
            day=day,
            clearing_price=rules.clamp(prev_price),
            volume=0,
            fills=[Fill(order_id=o.id, account=o.account, side=o.side, quantity=0) for o in orders],
            n_orders=len(orders),
        )

    price = best_price
    eligible_buys = [o for o in buys if o.limit >= price]
    eligible_sells = [o for o in sells if o.limit <= price]
    filled = {}
    filled.update(_ration(eligible_buys, best_volume, rules.lot_cents))
    filled.update(_ration(eligible_sells, best_volume, rules.lot_cents))

    fills = [
        Fill(order_id=o.id, account=o.account, side=o.side, quantity=filled.get(o.id, 0))
        for o in sorted(orders, key=lambda o: o.id)
    ]
    seller_fills = [(o.id, o.account, filled.get(o.id, 0)) for o in eligible_sells if o.account != AGENCY]
    fee_base = sum(q for _, _, q in seller_fills)
    total_fee = int((rules.fee_rate * fee_base).quantize(Decimal(1), rounding=ROUND_HALF_UP))

    fiat = []
    for buy, sell, quantity in _trade_legs(eligible_buys, eligible_sells, filled):
        amount = (Decimal(quantity) / CENTS_PER_COIN * price).quantize(_FIAT_QUANTUM, rounding=ROUND_HALF_UP)
        fiat.append(FiatTransfer(payer=buy.account, payee=sell.account, amount=amount, kind="trade"))

    return ClearingResult(
        day=day,
        clearing_price=price,
        volume=best_volume,
        fills=fills,
        fees_collected=total_fee,
        fiat_transfers=fiat,
        n_orders=len(orders),
    )


def _trade_legs(buys: list[Order], sells: list[Order], filled: dict[int, int]) -> list[tuple[Order, Order, int]]:
    """Empareja compras y ventas ejecutadas en orden de id (cascada): (compra, venta, cantidad)."""
    buy_queue = [[o, filled.get(o.id, 0)] for o in sorted(buys, key=lambda o: o.id) if filled.get(o.id, 0) > 0]
    sell_queue = [[o, filled.get(o.id, 0)] for o in sorted(sells, key=lambda o: o.id) if filled.get(o.id, 0) > 0]
    legs = []
    i = j = 0
    while i < len(buy_queue) and j < len(sell_queue):
        quantity = min(buy_queue[i][1], sell_queue[j][1])
        legs.append((buy_queue[i][0], sell_queue[j][0], quantity))
        buy_queue[i][1] -= quantity
        sell_queue[j][1] -= quantity
        if buy_queue[i][1] == 0:
            i += 1
        if sell_queue[j][1] == 0:
            j += 1
    return legs


def settlement_postings(result: ClearingResult, book) -> list[Posting]:
    """
    Patas del libro de cuentas de una sesión: primero las transferencias
    vendedor -> comprador, después las comisiones vendedor -> Agencia.
    """
    orders = list(book.orders) if isinstance(book, OrderBook) else list(book)
    filled = {f.order_id: f.quantity for f in result.fills}
    buys = [o for o in orders if o.side == Side.BUY]
    sells = [o for o in orders if o.side == Side.SELL]

    postings = [
        Posting(EventKind.TRADE, sell.account, buy.account, quantity, f"trade:{buy.id}:{sell.id}")
        for buy, sell, quantity in _trade_legs(buys, sells, filled)
    ]
    by_id = {o.id: o for o in orders}
    seller_fills = [
        (o.id, o.account, filled.get(o.id, 0))
        for o in sorted(sells, key=lambda o: o.id)
        if o.account != AGENCY and filled.get(o.id, 0) > 0
    ]
    for order_id, fee in sorted(_split_fee(result.fees_collected, seller_fills).items()):
        if fee > 0:
            postings.append(Posting(EventKind.TRANSACTION_FEE, by_id[order_id].account, AGENCY, fee, f"fee:{order_id}"))
    return postings


class ForcedPurchase(NamedTuple):
    postings: list[Posting]
    fiat: list[FiatTransfer]


def forced_purchase(
    account: AccountId,
    shortfall: int,
    current_price: Decimal,
    rules: MarketRules,
    reserve: AgencyReserve,
    memo: str = "",
) -> ForcedPurchase:
    """
    Compra inmediata a la reserva de la Agencia al precio de mercado vigente,
    con un recargo de penalización rho: coste fiat = déficit · precio · (1 + rho).
    """
    if shortfall <= 0:
        return ForcedPurchase([], [])
    if reserve.available < shortfall:
        logging.error(f"Agency reserve exhausted: {account} needs {shortfall} cents, reserve {reserve.available}")
        raise EmptyAgencyReserve(shortfall, reserve.available)
    reserve.draw(shortfall)

    base = (Decimal(shortfall) / CENTS_PER_COIN * current_price).quantize(_FIAT_QUANTUM, rounding=ROUND_HALF_UP)
    surcharge = (base * rules.penalty_rate).quantize(_FIAT_QUANTUM, rounding=ROUND_HALF_UP)
    fiat = [FiatTransfer(payer=account, payee=AGENCY, amount=base, kind="forced_purchase")]
    if surcharge > 0:
        fiat.append(FiatTransfer(payer=account, payee=AGENCY, amount=surcharge, kind="penalty"))
    posting = Posting(EventKind.FORCED_PURCHASE, AGENCY, account, shortfall, memo or f"penalty:{surcharge}")
    return ForcedPurchase([posting], fiat)
