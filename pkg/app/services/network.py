# app/services/network.py
#
# Tiempos de viaje congestionados y estado del tráfico por modo.
#
# Función volumen-demora (BPR):
#   t = base_time·travel_time_factor·(1 + alpha·(demanda / (capacidad·capacity_factor))^beta)
# para modos congestionables; t = base_time·travel_time_factor en el resto.
# La demanda del día d fija el estado del tráfico del día d+1.

from decimal import Decimal, ROUND_HALF_UP

from app.exceptions import UnknownMode
from app.models.network import ModeSupply, NetworkState
from app.models.pricing import TrafficState

# El multiplicador de congestión se fija a 4 decimales antes de entrar en la tarifa.
MULTIPLIER_QUANTUM = Decimal("0.0001")


def _supply(network: NetworkState, mode: str) -> ModeSupply:
    supply = network.modes.get(mode)
    if supply is None:
        raise UnknownMode(mode)
    return supply


def congestion_ratio(network: NetworkState, mode: str, demand: float) -> float:
    """Cociente tiempo congestionado / tiempo en flujo libre (sin acotar)."""
    supply = _supply(network, mode)
    if not supply.congestible or demand <= 0:
        return 1.0
    load = demand / (supply.capacity * supply.capacity_factor)
    return 1.0 + supply.alpha * load ** supply.beta


def congested_time(network: NetworkState, mode: str, demand: float) -> float:
    """Tiempo de viaje en minutos según la función volumen-demora."""
    supply = _supply(network, mode)
    return supply.free_flow_time * congestion_ratio(network, mode, demand)


def traffic_state(network: NetworkState, mode: str, demand: float) -> TrafficState:
    """Multiplicador de congestión = t_congestionado / t_libre, acotado a [1, c_max]."""
    ratio = Decimal(repr(congestion_ratio(network, mode, demand)))
    ratio = ratio.quantize(MULTIPLIER_QUANTUM, rounding=ROUND_HALF_UP)
    return TrafficState(congestion_multiplier=min(max(ratio, Decimal(1)), network.c_max))
