# app/services/ledger.py
#
# Libro de cuentas de solo-anexado: cada movimiento de MobilityCoins entre
# personas, empleadores, comercios y la Agencia queda registrado como un
# LedgerRecord con número de secuencia contiguo. LedgerEvent es la forma
# validada de ese registro al leer events.jsonl.
#
# Convención de lotes: las patas de un lote se ordenan con los abonos primero,
# de modo que cada prefijo del log cumple la no-negatividad y `replay` puede
# comprobarla evento a evento.

import hashlib
import json
import logging
import threading
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

from app.exceptions import (
    InsufficientBalance,
    InvalidEventRoute,
    LedgerError,
    NegativeBalanceAt,
    ReplayIntegrityError,
    SequenceGap,
    UnknownAccount,
)
from app.models.ledger import AGENCY, AccountId, AccountKind, EventKind, LedgerEvent, LedgerRecord, Posting

_ANY = frozenset(AccountKind)
_NON_AGENCY = frozenset({AccountKind.PERSON, AccountKind.EMPLOYER, AccountKind.MERCHANT})
_AGENCY_ONLY = frozenset({AccountKind.AGENCY})

# Direcciones permitidas por tipo de evento: (tipos de origen, tipos de destino).
EVENT_ROUTES = {
    EventKind.ALLOCATION: (_AGENCY_ONLY, frozenset({AccountKind.PERSON})),
    EventKind.TRIP_CHARGE: (frozenset({AccountKind.PERSON}), _AGENCY_ONLY),
    EventKind.TRIP_EARN: (_AGENCY_ONLY, frozenset({AccountKind.PERSON})),
    EventKind.TRADE: (_ANY, _NON_AGENCY),
    EventKind.TRANSACTION_FEE: (_NON_AGENCY, _AGENCY_ONLY),
    EventKind.REIMBURSEMENT: (frozenset({AccountKind.EMPLOYER}), frozenset({AccountKind.PERSON})),
    EventKind.ALLOWANCE: (frozenset({AccountKind.EMPLOYER}), frozenset({AccountKind.PERSON})),
    EventKind.DELIVERY_CHARGE: (frozenset({AccountKind.PERSON, AccountKind.MERCHANT}), _AGENCY_ONLY),
    EventKind.FORCED_PURCHASE: (_AGENCY_ONLY, _NON_AGENCY),
    EventKind.PENALTY: (_NON_AGENCY, _AGENCY_ONLY),
    EventKind.EXPIRY: (frozenset({AccountKind.PERSON}), _AGENCY_ONLY),
}

_ROUTE_KEYS = frozenset(
    (kind, source, target)
    for kind, (sources, targets) in EVENT_ROUTES.items()
    for source in sources
    for target in targets
)


def check_route(kind: EventKind, source: AccountId, target: AccountId):
    sources, targets = EVENT_ROUTES[kind]
    if source == target or source.kind not in sources or target.kind not in targets:
        raise InvalidEventRoute(kind.value, source, target)


class Ledger:
    """
    Estado incremental del libro. Un solo escritor; las lecturas de estado
    confirmado pueden hacerse desde varios hilos.

    Args:
        sink: objeto con un método `write_many(records)` que persiste los eventos confirmados.
        keep_events: conserva los eventos en memoria (útil en tests y en la API).
    """

    def __init__(self, sink=None, keep_events: bool = True):
        self._balances: dict[AccountId, int] = {AGENCY: 0}
        self._next_seq = 0
        self._events: Optional[list[LedgerRecord]] = [] if keep_events else None
        self._sink = sink
        self._lock = threading.Lock()

    # --- Cuentas ---

    def open_account(self, account: AccountId):
        with self._lock:
            self._balances.setdefault(account, 0)

    def has_account(self, account: AccountId) -> bool:
        return account in self._balances

    def balance(self, account: AccountId) -> int:
        try:
            return self._balances[account]
        except KeyError:
            raise UnknownAccount(account)

    def balances(self) -> dict[AccountId, int]:
        """Copia del mapa de saldos en orden de cuenta."""
        with self._lock:
            return dict(sorted(self._balances.items()))

    @property
    def next_seq(self) -> int:
        return self._next_seq

    @property
    def events(self) -> list[LedgerRecord]:
        if self._events is None:
            raise RuntimeError("this ledger was created with keep_events=False")
        return list(self._events)

    def balances_for(self, accounts: Iterable[AccountId]) -> list[int]:
        """Saldos de varias cuentas en el orden pedido."""
        balances = self._balances
        try:
            return [balances[account] for account in accounts]
        except KeyError as e:
            raise UnknownAccount(e.args[0])

    # --- Escritura ---

    def append_event(self, event: LedgerEvent) -> dict[AccountId, int]:
        """
        Añade un único evento ya secuenciado. Devuelve los saldos actualizados
        de las dos cuentas implicadas.
        """
        with self._lock:
            if event.seq != self._next_seq:
                raise SequenceGap(self._next_seq, event.seq)
            check_route(event.kind, event.source, event.target)
            for account in (event.source, event.target):
                if account not in self._balances:
                    raise UnknownAccount(account)
            available = self._balances[event.source]
            if event.source != AGENCY and available < event.amount_cents:
                raise InsufficientBalance(event.source, event.amount_cents, available)
            self._balances[event.source] -= event.amount_cents
            self._balances[event.target] += event.amount_cents
            self._record([LedgerRecord(
                event.seq, event.day, event.kind, event.source, event.target, event.amount_cents, event.memo
            )])
            return {
                event.source: self._balances[event.source],
                event.target: self._balances[event.target],
            }

    def commit_batch(self, day: int, postings: Iterable[Posting]) -> list[LedgerRecord]:
        """
        Confirma un lote de patas de forma atómica: o entran todas o ninguna.
        Cada prefijo del lote debe dejar saldos no negativos (salvo la Agencia).
        """
        postings = [p for p in postings if p.amount != 0]
        if not postings:
            return []
        with self._lock:
            balances = self._balances
            scratch: dict[AccountId, int] = {}
            for kind, source, target, amount, _ in postings:
                if amount < 0:
                    raise ValueError(f"posting amounts must be positive, got {amount}")
                if source == target or (kind, source.kind, target.kind) not in _ROUTE_KEYS:
                    raise InvalidEventRoute(kind.value, source, target)
                if source not in balances:
                    raise UnknownAccount(source)
                if target not in balances:
                    raise UnknownAccount(target)
                have = scratch[source] if source in scratch else balances[source]
                if have < amount and source != AGENCY:
                    raise InsufficientBalance(source, amount, have)
                scratch[source] = have - amount
                scratch[target] = (scratch[target] if target in scratch else balances[target]) + amount

            first = self._next_seq
            records = [
                LedgerRecord(first + k, day, kind, source, target, amount, memo)
                for k, (kind, source, target, amount, memo) in enumerate(postings)
            ]
            balances.update(scratch)
            self._record(records)
            return records

    def _record(self, records: list[LedgerRecord]):
        self._next_seq += len(records)
        if self._events is not None:
            self._events.extend(records)
        if self._sink is not None:
            self._sink.write_many(records)


def replay(events: Iterable[Union[LedgerEvent, LedgerRecord]]) -> dict[AccountId, int]:
    """
    Reconstruye el mapa de saldos a partir de un flujo de eventos (del log o del libro en memoria).
    Función pura: el mismo flujo produce siempre el mismo mapa.
    """
    balances: dict[AccountId, int] = {AGENCY: 0}
    expected = 0
    for event in events:
        if event.seq != expected:
            raise SequenceGap(expected, event.seq)
        check_route(event.kind, event.source, event.target)
        balances[event.source] = balances.get(event.source, 0) - event.amount_cents
        balances[event.target] = balances.get(event.target, 0) + event.amount_cents
        if event.source != AGENCY and balances[event.source] < 0:
            raise NegativeBalanceAt(event.seq, event.source)
        expected += 1
    return dict(sorted(balances.items()))


def conservation_check(balances: dict[AccountId, int]) -> bool:
    """La suma de todos los saldos, Agencia incluida, es exactamente cero."""
    return sum(balances.values()) == 0


def serialize_balances(balances: dict[AccountId, int]) -> str:
    """JSON canónico del mapa de saldos (se omiten las cuentas a cero)."""
    return json.dumps(
        {str(account): amount for account, amount in sorted(balances.items()) if amount != 0},
        separators=(",", ":"),
    )


def balance_digest(balances: dict[AccountId, int]) -> str:
    return hashlib.sha256(serialize_balances(balances).encode("utf-8")).hexdigest()


def read_event_log(path: Path) -> Iterator[LedgerEvent]:
    """Lee events.jsonl línea a línea, validando cada registro."""
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                yield LedgerEvent.model_validate_json(line)
            except ValueError as e:
                logging.error(f"Malformed event at line {line_no} of {path}: {e}")
                raise


def verify_log(path: Path, event_count: Optional[int] = None, digest: Optional[str] = None) -> dict[AccountId, int]:
    """
    Reproduce events.jsonl y comprueba conservación y, si se dan, el número
    de eventos y el hash de saldos finales registrados por la corrida.
    """
    try:
        events = list(read_event_log(path))
        balances = replay(events)
    except (LedgerError, ValueError) as e:
        raise ReplayIntegrityError(f"replay of {path} failed: {e}")
    if not conservation_check(balances):
        raise ReplayIntegrityError(f"balances in {path} do not sum to zero")
    if event_count is not None and len(events) != event_count:
        raise ReplayIntegrityError(f"{path} holds {len(events)} events, the run recorded {event_count}")
    if digest is not None and balance_digest(balances) != digest:
        raise ReplayIntegrityError(f"final balances of {path} differ from the run checkpoint")
    logging.info(f"Replayed {len(events)} events from {path}: integrity checks passed")
    return balances
