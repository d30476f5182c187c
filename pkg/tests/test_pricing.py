# tests/test_pricing.py
#
# Tests de la tarifa de viaje y del tope diario de ganancias.

import os
import sys
# Añade el directorio raíz del proyecto al sys.path para que los módulos puedan ser encontrados.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from app.exceptions import UnknownMode
from app.models.ledger import person
from app.models.pricing import EarnCapState, ModeRate, PriceSchedule, TrafficState, TripQuery
from app.services.pricing import DailyEarnCap, apply_daily_cap, price_matrix, trip_price

SCHEDULE = PriceSchedule(rates={
    "car": ModeRate(rate_dist=Decimal(300), congestion_applies=True, occupancy_divides=True),
    "bus": ModeRate(rate_dist=Decimal(150)),
    "bike": ModeRate(rate_dist=Decimal(-100)),
    "taxi": ModeRate(rate_dist=Decimal("2.5")),
})


def test_bus_reference_trip_costs_fifteen_coins():
    q = TripQuery(mode="bus", distance=Decimal(10), duration=Decimal(35))
    assert trip_price(q, SCHEDULE) == 1500


def test_car_price_scales_with_congestion_and_occupancy():
    q = TripQuery(
        mode="car", distance=Decimal(10), duration=Decimal(20), occupancy=2,
        traffic=TrafficState(congestion_multiplier=Decimal("1.5")),
    )
    assert trip_price(q, SCHEDULE) == 2250


def test_earning_mode_has_negative_price():
    q = TripQuery(mode="bike", distance=Decimal(9), duration=Decimal(40))
    assert trip_price(q, SCHEDULE) == -900


def test_halves_round_away_from_zero():
    q = TripQuery(mode="taxi", distance=Decimal(1), duration=Decimal(0))
    assert trip_price(q, SCHEDULE) == 3
    earning = PriceSchedule(rates={"walk": ModeRate(rate_dist=Decimal("-2.5"))})
    assert trip_price(TripQuery(mode="walk", distance=Decimal(1), duration=Decimal(0)), earning) == -3


def test_unknown_mode():
    with pytest.raises(UnknownMode):
        trip_price(TripQuery(mode="tram", distance=Decimal(1), duration=Decimal(1)), SCHEDULE)


def test_empty_trip_is_rejected():
    with pytest.raises(ValidationError):
        TripQuery(mode="bus", distance=Decimal(0), duration=Decimal(0))


def test_earning_modes_cannot_use_congestion():
    with pytest.raises(ValidationError):
        ModeRate(rate_dist=Decimal(-100), congestion_applies=True)


@given(
    st.lists(
        st.tuples(
            st.decimals(min_value=0, max_value=50, places=2),
            st.decimals(min_value=1, max_value=3, places=4),
        ),
        min_size=1,
        max_size=20,
    )
)
@settings(max_examples=100, deadline=None)
def test_price_matrix_agrees_with_trip_price(trips):
    modes = ["car", "bus", "bike"]
    distance = np.array([[float(d)] * 3 for d, _ in trips])
    duration = np.full((len(trips), 3), 10.0)
    for i, (d, c) in enumerate(trips):
        multipliers = np.array([float(c), 1.0, 1.0])
        matrix = price_matrix(SCHEDULE, modes, distance[i:i + 1], duration[i:i + 1], multipliers, np.ones(3))
        for j, mode in enumerate(modes):
            q = TripQuery(
                mode=mode, distance=d, duration=Decimal(10),
                traffic=TrafficState(congestion_multiplier=c if mode == "car" else Decimal(1)),
            )
            assert matrix[0, j] == trip_price(q, SCHEDULE)


@given(st.lists(st.lists(st.integers(0, 2000), max_size=12), min_size=1, max_size=5), st.integers(0, 1500))
@settings(max_examples=200, deadline=None)
def test_daily_cap_never_exceeded(days, e_max):
    cap = DailyEarnCap(n_agents=2, e_max=e_max)
    for day, earns in enumerate(days):
        cap.start_day(day)
        credited = [cap.credit(1, earn) for earn in earns]
        assert sum(credited) <= e_max
        assert sum(credited) == min(sum(earns), e_max)
        assert all(0 <= c <= e for c, e in zip(credited, earns))
        assert cap.earned[0] == 0


@given(st.lists(st.tuples(st.integers(0, 2000), st.integers(0, 2000)), min_size=1, max_size=20), st.integers(0, 1500))
@settings(max_examples=200, deadline=None)
def test_batch_credit_matches_one_by_one(earns, e_max):
    n = len(earns)
    one, batch = DailyEarnCap(n, e_max), DailyEarnCap(n, e_max)
    one.start_day(0)
    batch.start_day(0)
    for column in range(2):
        expected = [one.credit(i, pair[column]) for i, pair in enumerate(earns)]
        credited = batch.credit_many(np.arange(n), np.array([pair[column] for pair in earns]))
        assert credited.tolist() == expected
    assert batch.earned.tolist() == one.earned.tolist()
    assert batch.saturated == one.saturated


def test_apply_daily_cap_resets_on_new_day():
    state = EarnCapState(agent=person(0), day=0)
    credited, state = apply_daily_cap(state, 400, e_max=600)
    assert credited == 400
    credited, state = apply_daily_cap(state, 400, e_max=600)
    assert credited == 200
    assert state.earned_today == 600
    credited, state = apply_daily_cap(state, 400, e_max=600, day=1)
    assert credited == 400
    assert state.day == 1
