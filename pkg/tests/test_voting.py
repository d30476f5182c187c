# tests/test_voting.py
#
# Tests de la votación de fin de año y de la aplicación de medidas a la red.

import os
import sys
# Añade el directorio raíz del proyecto al sys.path para que los módulos puedan ser encontrados.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from decimal import Decimal

import numpy as np
import pytest

from app.exceptions import UnknownMode
from app.models.ledger import AGENCY, employer, person
from app.models.network import ModeSupply, NetworkState
from app.models.voting import Ballot, Bundle, EffectParameter, Measure, MeasureEffect
from app.services.voting import apply_measures, build_ballots, tally_bundle, tally_split, voting_weights

NETWORK = NetworkState(modes={
    "car": ModeSupply(base_time=20, congestible=True, capacity=1000, alpha=1.0, beta=4.0),
    "bike": ModeSupply(base_time=30),
})


def measure(measure_id, cost=1, effects=()):
    return Measure(id=measure_id, label=f"M{measure_id}", cost=Decimal(cost), effects=list(effects))


BIKE_LANE = measure(1, effects=[
    MeasureEffect(mode="bike", parameter=EffectParameter.TRAVEL_TIME_FACTOR, value=0.9),
    MeasureEffect(mode="car", parameter=EffectParameter.CAPACITY_FACTOR, value=0.95),
])


def test_weights_are_person_balances():
    balances = {person(0): 3000, person(1): 1000, person(2): 0, employer(0): 5000, AGENCY: -9000}
    assert voting_weights(balances) == {person(0): 3000, person(1): 1000, person(2): 0}
    scaled = voting_weights({a: 7 * b for a, b in balances.items()})
    assert scaled == {person(0): 21000, person(1): 7000, person(2): 0}
    assert voting_weights({person(0): 0, person(1): 0}) == {person(0): 0, person(1): 0}


def test_sqrt_rule():
    assert voting_weights({person(0): 10000}, rule="sqrt") == {person(0): 100}


def test_split_example():
    ballots = [
        Ballot(voter=person(0), weight=3000, split={1: Decimal("0.5"), 2: Decimal("0.5")}),
        Ballot(voter=person(1), weight=1000, split={1: Decimal(1)}),
    ]
    tally = tally_split(ballots, [measure(1), measure(2)], budget=1)
    assert tally.scores == {1: 2500, 2: 1500}
    assert tally.selected == [1]


def test_no_ballots_select_nothing():
    assert tally_split([], [measure(1), measure(2)], budget=10).selected == []


def test_zero_weight_ballots_are_ignored():
    ballots = [Ballot(voter=person(0), weight=0, split={1: Decimal(1)})]
    assert tally_split(ballots, [measure(1)], budget=10).selected == []


def test_greedy_skips_what_does_not_fit():
    ballots = [Ballot(voter=person(0), weight=100, split={1: Decimal("0.5"), 2: Decimal("0.3"), 3: Decimal("0.2")})]
    measures = [measure(1, cost=60), measure(2, cost=50), measure(3, cost=40)]
    tally = tally_split(ballots, measures, budget=100)
    assert tally.selected == [1, 3]


def test_selection_is_invariant_to_weight_scaling():
    rng = np.random.default_rng(17)
    measures = [measure(i, cost=int(rng.integers(1, 50))) for i in range(6)]
    for _ in range(1000):
        ballots = []
        for v in range(int(rng.integers(0, 8))):
            chosen = rng.choice(6, size=int(rng.integers(1, 4)), replace=False)
            fractions = rng.dirichlet(np.ones(len(chosen)))
            split = {int(m): Decimal(str(round(float(f), 3))) for m, f in zip(chosen, fractions)}
            while sum(split.values()) > 1:
                key = max(split, key=split.get)
                split[key] -= Decimal("0.001")
            ballots.append(Ballot(voter=person(v), weight=int(rng.integers(0, 5000)), split=split))
        budget = int(rng.integers(0, 120))
        c = int(rng.integers(2, 100))
        scaled = [b.model_copy(update={"weight": b.weight * c}) for b in ballots]
        first = tally_split(ballots, measures, budget)
        assert tally_split(scaled, measures, budget).selected == first.selected
        assert sum(m.cost for m in measures if m.id in first.selected) <= budget


def test_bundle_winner_is_invariant_to_weight_scaling():
    rng = np.random.default_rng(23)
    for _ in range(1000):
        bundles = [Bundle(id=int(b), measures=[int(b)]) for b in sorted(rng.choice(10, size=int(rng.integers(1, 5)), replace=False))]
        ids = [b.id for b in bundles]
        ballots = [
            Ballot(voter=person(v), weight=int(rng.integers(0, 5000)), bundle=ids[int(rng.integers(len(ids)))])
            for v in range(int(rng.integers(0, 10)))
        ]
        c = int(rng.integers(2, 100))
        scaled = [b.model_copy(update={"weight": b.weight * c}) for b in ballots]
        assert tally_bundle(scaled, bundles).winner == tally_bundle(ballots, bundles).winner


def test_bundle_plurality_and_ties():
    bundles = [Bundle(id=1, measures=[1]), Bundle(id=2, measures=[2])]
    ballots = [Ballot(voter=person(0), weight=3000, bundle=1), Ballot(voter=person(1), weight=1000, bundle=2)]
    assert tally_bundle(ballots, bundles).winner == 1
    tied = [Ballot(voter=person(0), weight=1000, bundle=2), Ballot(voter=person(1), weight=1000, bundle=1)]
    assert tally_bundle(tied, bundles).winner == 1
    single = [Bundle(id=5, measures=[1])]
    assert tally_bundle([Ballot(voter=person(0), weight=10, bundle=5)], single).winner == 5
    assert tally_bundle([], bundles).winner is None


def test_bike_lane_measure():
    updated = apply_measures(NETWORK, [BIKE_LANE])
    assert updated.modes["bike"].free_flow_time == pytest.approx(27)
    car = updated.modes["car"]
    assert car.capacity * car.capacity_factor == pytest.approx(950)


def test_empty_selection_leaves_network_unchanged():
    assert apply_measures(NETWORK, []) == NETWORK


def test_measures_commute():
    a = measure(1, effects=[MeasureEffect(mode="bike", parameter=EffectParameter.TRAVEL_TIME_FACTOR, value=0.9)])
    b = measure(2, effects=[MeasureEffect(mode="bike", parameter=EffectParameter.TRAVEL_TIME_FACTOR, value=0.9)])
    c = measure(3, effects=[MeasureEffect(mode="bike", parameter=EffectParameter.TRAVEL_TIME_FACTOR, value=0.8)])
    ab = apply_measures(NETWORK, [a, b, c])
    ba = apply_measures(NETWORK, [c, b, a])
    assert ab == ba
    assert apply_measures(NETWORK, [a, b]).modes["bike"].travel_time_factor == pytest.approx(0.81)


def test_availability_effect():
    closed = measure(1, effects=[MeasureEffect(mode="car", parameter=EffectParameter.AVAILABILITY, value=False)])
    assert apply_measures(NETWORK, [closed]).modes["car"].available is False


def test_unknown_mode_in_effect():
    tram = measure(1, effects=[MeasureEffect(mode="tram", parameter=EffectParameter.CAPACITY_FACTOR, value=1.1)])
    with pytest.raises(UnknownMode):
        apply_measures(NETWORK, [tram])


def test_ballots_follow_usage():
    car_capacity = measure(2, effects=[MeasureEffect(mode="car", parameter=EffectParameter.CAPACITY_FACTOR, value=1.1)])
    measures = [BIKE_LANE, car_capacity]
    usage = np.array([[0, 10], [3, 1], [5, 5]])
    weights = {person(0): 500, person(1): 800, person(2): 0}
    ballots = build_ballots(weights, usage, ["car", "bike"], measures)
    assert [b.voter for b in ballots] == [person(0), person(1)]
    assert ballots[0].split == {1: Decimal(1)}
    assert ballots[1].split == {1: Decimal("0.25"), 2: Decimal("0.75")}


def test_bundle_ballots_pick_the_most_relevant_bundle():
    car_capacity = measure(2, effects=[MeasureEffect(mode="car", parameter=EffectParameter.CAPACITY_FACTOR, value=1.1)])
    bundles = [Bundle(id=1, measures=[1]), Bundle(id=2, measures=[2])]
    usage = np.array([[9, 0]])
    ballots = build_ballots({person(0): 100}, usage, ["car", "bike"], [BIKE_LANE, car_capacity], bundles, "bundle")
    assert [(b.voter, b.bundle) for b in ballots] == [(person(0), 2)]
