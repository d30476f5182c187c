# app/models/ledger.py
#
# Modelos del libro de cuentas de MobilityCoins.
# Todos los importes son enteros en céntimos de moneda (1 MobilityCoin = 100 céntimos).

from decimal import Decimal, ROUND_HALF_UP
from enum import Enum, IntEnum
from typing import Annotated, NamedTuple

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer

CENTS_PER_COIN = 100


class AccountKind(IntEnum):
    """Tipos de cuenta. El orden numérico define el orden total de las cuentas."""
    PERSON = 0
    EMPLOYER = 1
    MERCHANT = 2
    AGENCY = 3


class AccountId(NamedTuple):
    kind: AccountKind
    index: int

    def __str__(self) -> str:
        return f"{self.kind.name.lower()}:{self.index}"

    @classmethod
    def parse(cls, value) -> "AccountId":
        """Acepta 'person:3', una tupla (kind, index) o un AccountId."""
        if isinstance(value, AccountId):
            return value
        if isinstance(value, str):
            kind, _, index = value.partition(":")
            try:
                return cls(AccountKind[kind.upper()], int(index))
            except (KeyError, ValueError):
                raise ValueError(f"invalid account id '{value}'")
        if isinstance(value, (tuple, list)) and len(value) == 2:
            return cls(AccountKind(value[0]), int(value[1]))
        raise ValueError(f"invalid account id {value!r}")


AGENCY = AccountId(AccountKind.AGENCY, 0)


def person(index: int) -> AccountId:
    return AccountId(AccountKind.PERSON, index)


def employer(index: int) -> AccountId:
    return AccountId(AccountKind.EMPLOYER, index)


def merchant(index: int) -> AccountId:
    return AccountId(AccountKind.MERCHANT, index)


def _check_account(value) -> AccountId:
    account = AccountId.parse(value)
    if account.index < 0:
        raise ValueError("account index must be non-negative")
    if account.kind == AccountKind.AGENCY and account.index != 0:
        raise ValueError("the agency has exactly one account, index 0")
    return account


# Tipo anotado para usar AccountId dentro de modelos Pydantic (se serializa como 'person:3').
AccountRef = Annotated[AccountId, BeforeValidator(_check_account), PlainSerializer(str, return_type=str)]


class EventKind(str, Enum):
    ALLOCATION = "Allocation"
    TRIP_CHARGE = "TripCharge"
    TRIP_EARN = "TripEarn"
    TRADE = "Trade"
    TRANSACTION_FEE = "TransactionFee"
    REIMBURSEMENT = "Reimbursement"
    ALLOWANCE = "Allowance"
    DELIVERY_CHARGE = "DeliveryCharge"
    FORCED_PURCHASE = "ForcedPurchase"
    PENALTY = "Penalty"
    EXPIRY = "Expiry"


class LedgerEvent(BaseModel):
    """
    Un movimiento de monedas. El importe siempre es positivo; la dirección
    (from -> to) lleva el signo.
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    seq: int = Field(ge=0)
    day: int = Field(ge=0)
    kind: EventKind
    source: AccountRef = Field(alias="from")
    target: AccountRef = Field(alias="to")
    amount_cents: int = Field(gt=0)
    memo: str = ""

    def to_record(self) -> dict:
        """Registro con los nombres de campo exactos de events.jsonl."""
        return {
            "seq": self.seq,
            "day": self.day,
            "kind": self.kind.value,
            "from": str(self.source),
            "to": str(self.target),
            "amount_cents": self.amount_cents,
            "memo": self.memo,
        }


class LedgerRecord(NamedTuple):
    """
    Evento confirmado tal como lo guarda el libro en memoria. Los campos
    coinciden con los de LedgerEvent, que es la forma validada al leer el log.
    """
    seq: int
    day: int
    kind: EventKind
    source: AccountId
    target: AccountId
    amount_cents: int
    memo: str = ""


class Posting(NamedTuple):
    """Una pata de un lote de liquidación, todavía sin número de secuencia."""
    kind: EventKind
    source: AccountId
    target: AccountId
    amount: int
    memo: str = ""


class Wallet(BaseModel):
    """Saldo de una cuenta reconstruido a partir del log de eventos."""
    account: AccountRef
    balance: int


def to_cents(coins) -> int:
    """Convierte monedas (str, int o Decimal) a céntimos, redondeando a la mitad lejos de cero."""
    value = Decimal(str(coins)) * CENTS_PER_COIN
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def format_cents(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    whole, frac = divmod(abs(cents), CENTS_PER_COIN)
    return f"{sign}{whole}.{frac:02d}"
