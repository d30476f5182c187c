# app/services/pricing.py
#
# Precio firmado de un viaje en MobilityCoins y tope diario de ganancias.
#
# Tarifa de viaje:
#   precio = redondeo_mitad_lejos_de_cero( (rate_dist·distancia·c + rate_time·duración) / o )
# con c = multiplicador de congestión si el modo lo aplica (si no, 1)
# y   o = ocupación si el modo divide por ocupación (si no, 1).
# Positivo = cobro, negativo = ganancia.

from decimal import Decimal, ROUND_HALF_UP
from typing import Optional, Sequence

import numpy as np

from app.exceptions import UnknownMode
from app.models.pricing import EarnCapState, PriceSchedule, TripQuery

_ONE = Decimal(1)


def trip_price(q: TripQuery, s: PriceSchedule) -> int:
    """Precio del viaje en céntimos de moneda según la tarifa del modo."""
    rate = s.rates.get(q.mode)
    if rate is None:
        raise UnknownMode(q.mode)
    c = q.traffic.congestion_multiplier if rate.congestion_applies else _ONE
    o = Decimal(q.occupancy) if rate.occupancy_divides else _ONE
    raw = (rate.rate_dist * q.distance * c + rate.rate_time * q.duration) / o
    # ROUND_HALF_UP de Decimal redondea las mitades lejos de cero, en ambos signos.
    return int(raw.quantize(_ONE, rounding=ROUND_HALF_UP))


def price_matrix(
    s: PriceSchedule,
    modes: Sequence[str],
    distance: np.ndarray,
    duration: np.ndarray,
    multipliers: np.ndarray,
    occupancy: np.ndarray,
) -> np.ndarray:
    """
    Versión vectorizada de la tarifa para toda la población (agentes x modos).

    El cálculo se hace en float64, se fija a 6 decimales y se redondea la
    mitad lejos de cero; el resultado es un entero de céntimos por celda.
    """
    rate_dist = np.empty(len(modes))
    rate_time = np.empty(len(modes))
    c = np.ones(len(modes))
    o = np.ones(len(modes))
    for j, mode in enumerate(modes):
        rate = s.rates.get(mode)
        if rate is None:
            raise UnknownMode(mode)
        rate_dist[j] = float(rate.rate_dist)
        rate_time[j] = float(rate.rate_time)
        if rate.congestion_applies:
            c[j] = float(multipliers[j])
        if rate.occupancy_divides:
            o[j] = float(occupancy[j])
    raw = (rate_dist * distance * c + rate_time * duration) / o
    raw = np.round(raw, 6)
    return (np.sign(raw) * np.floor(np.abs(raw) + 0.5)).astype(np.int64)


def credit_under_cap(earned_today: int, earn: int, e_max: int) -> int:
    if earn < 0:
        raise ValueError("earn must be non-negative")
    return max(0, min(earn, e_max - earned_today))


def apply_daily_cap(
    state: EarnCapState, earn: int, e_max: int, day: Optional[int] = None
) -> tuple[int, EarnCapState]:
    """
    Aplica el tope diario de monedas ganables. Si `day` indica un día nuevo,
    el acumulado vuelve a cero antes de abonar.

    Returns:
        (importe abonado, estado actualizado)
    """
    if day is not None and day != state.day:
        state = EarnCapState(agent=state.agent, day=day, earned_today=0)
    credited = credit_under_cap(state.earned_today, earn, e_max)
    updated = state.model_copy(update={"earned_today": state.earned_today + credited})
    return credited, updated


class DailyEarnCap:
    """
    Contador del tope diario para toda la población, indexado por persona.
    Guarda también cuántas ganancias quedaron recortadas (para las métricas).
    """

    def __init__(self, n_agents: int, e_max: int):
        self.e_max = e_max
        self.earned = np.zeros(n_agents, dtype=np.int64)
        self.day: Optional[int] = None
        self.saturated = 0

    def start_day(self, day: int):
        if day != self.day:
            self.earned[:] = 0
            self.day = day
            self.saturated = 0

    def credit(self, agent_index: int, earn: int) -> int:
        credited = credit_under_cap(int(self.earned[agent_index]), earn, self.e_max)
        if credited < earn:
            self.saturated += 1
        self.earned[agent_index] += credited
        return credited

    def credit_many(self, agent_indices: np.ndarray, earns: np.ndarray) -> np.ndarray:
        """Versión por lotes de `credit`; cada persona aparece como mucho una vez."""
        earns = np.asarray(earns, dtype=np.int64)
        headroom = np.maximum(self.e_max - self.earned[agent_indices], 0)
        credited = np.minimum(earns, headroom)
        self.saturated += int((credited < earns).sum())
        self.earned[agent_indices] += credited
        return credited
