# tests/test_network.py
#
# Tests de la función volumen-demora y del estado del tráfico.

import os
import sys
# Añade el directorio raíz del proyecto al sys.path para que los módulos puedan ser encontrados.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from decimal import Decimal

import pytest
from hypothesis import given, settings, strategies as st

from app.exceptions import UnknownMode
from app.models.network import ModeSupply, NetworkState
from app.services.network import congested_time, traffic_state

NETWORK = NetworkState(
    modes={
        "car": ModeSupply(base_time=20, congestible=True, capacity=1000, alpha=1.0, beta=4.0),
        "walk": ModeSupply(base_time=100, travel_time_factor=0.5),
    },
    c_max=Decimal(3),
)


def test_free_flow():
    assert congested_time(NETWORK, "car", 0) == 20
    assert traffic_state(NETWORK, "car", 0).congestion_multiplier == Decimal(1)


def test_demand_at_capacity_doubles_travel_time():
    assert congested_time(NETWORK, "car", 1000) == pytest.approx(40)
    assert traffic_state(NETWORK, "car", 1000).congestion_multiplier == Decimal(2)


def test_walk_is_not_congestible():
    assert congested_time(NETWORK, "walk", 10**6) == 50
    assert traffic_state(NETWORK, "walk", 10**6).congestion_multiplier == Decimal(1)


def test_multiplier_is_capped():
    assert traffic_state(NETWORK, "car", 5000).congestion_multiplier == Decimal(3)


def test_unknown_mode():
    with pytest.raises(UnknownMode):
        congested_time(NETWORK, "tram", 10)


def test_congestible_mode_needs_capacity():
    with pytest.raises(ValueError):
        ModeSupply(base_time=10, congestible=True)


@given(st.floats(min_value=0, max_value=1e7, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_multiplier_stays_in_range(demand):
    multiplier = traffic_state(NETWORK, "car", demand).congestion_multiplier
    assert Decimal(1) <= multiplier <= NETWORK.c_max
