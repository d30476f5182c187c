# app/exceptions.py
#
# Jerarquía de errores del simulador. Cada excepción lleva los datos
# necesarios para actuar sobre ella (cuenta, déficit, seq, ruta del campo...).


class MobilityCoinError(Exception):
    """Error base del simulador."""


# --- Libro de cuentas ---

class LedgerError(MobilityCoinError):
    pass


class InsufficientBalance(LedgerError):
    def __init__(self, account, required: int, available: int):
        self.account = account
        self.required = required
        self.available = available
        self.shortfall = required - available
        super().__init__(
            f"{account} needs {required} cents but holds {available} (shortfall {self.shortfall})"
        )


class SequenceGap(LedgerError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected seq {expected}, got {got}")


class NegativeBalanceAt(LedgerError):
    def __init__(self, seq: int, account):
        self.seq = seq
        self.account = account
        super().__init__(f"balance of {account} negative after seq {seq}")


class InvalidEventRoute(LedgerError):
    def __init__(self, kind, source, target):
        super().__init__(f"{kind} cannot move coins from {source} to {target}")


class UnknownAccount(LedgerError):
    def __init__(self, account):
        self.account = account
        super().__init__(f"unknown account {account}")


class ReplayIntegrityError(LedgerError):
    """El log reproducido no coincide con el punto de control de la corrida."""


# --- Precios y elección ---

class UnknownMode(MobilityCoinError):
    def __init__(self, mode: str):
        self.mode = mode
        super().__init__(f"unknown mode '{mode}'")


class MissingOption(MobilityCoinError):
    def __init__(self, missing, extra=()):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        super().__init__(f"choice context mismatch: missing={self.missing} extra={self.extra}")


# --- Mercado ---

class MarketError(MobilityCoinError):
    pass


class SessionClosed(MarketError):
    pass


class UnbackedSell(MarketError):
    def __init__(self, account, quantity: int, available: int):
        self.account = account
        self.quantity = quantity
        self.available = available
        super().__init__(f"{account} cannot back a sell of {quantity} cents (available {available})")


class EmptyAgencyReserve(MarketError):
    def __init__(self, shortfall: int, reserve: int):
        self.shortfall = shortfall
        self.reserve = reserve
        super().__init__(f"agency reserve {reserve} cents cannot cover {shortfall} cents")


# --- Configuración del escenario ---

class ConfigError(MobilityCoinError):
    exit_code = 1


class ConfigSchemaError(ConfigError):
    exit_code = 1

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DanglingReferenceError(ConfigError):
    exit_code = 4

    def __init__(self, where: str, ref):
        self.where = where
        self.ref = ref
        super().__init__(f"{where} references unknown id '{ref}'")


class ConfigInvariantError(ConfigError):
    exit_code = 5
