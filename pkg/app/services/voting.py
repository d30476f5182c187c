# app/services/voting.py
#
# Votación de infraestructuras ponderada por el saldo de fin de año,
# en modo de votos repartidos o de paquetes, y aplicación de las medidas
# ganadoras a la red.
#
# Selección con votos repartidos:
#   puntuación(m) = sum peso·fracción(m); se ordena de mayor a menor (empates por id)
#   y se seleccionan con avidez mientras el coste acumulado no supere el presupuesto.

import logging
import math
from collections import defaultdict
from decimal import ROUND_DOWN, Decimal
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from app.exceptions import UnknownMode
from app.models.ledger import AccountId, AccountKind
from app.models.network import NetworkState
from app.models.voting import Ballot, Bundle, EffectParameter, Measure

_FRACTION_QUANTUM = Decimal("0.000001")


class SplitTally(NamedTuple):
    selected: list[int]
    scores: dict[int, Fraction]


class BundleTally(NamedTuple):
    winner: Optional[int]
    totals: dict[int, int]


def voting_weights(balances: Mapping[AccountId, int], rule: str = "linear") -> dict[AccountId, int]:
    """Peso de voto de cada persona: su saldo en céntimos (o su raíz entera con la regla 'sqrt')."""
    weights = {}
    for account, balance in sorted(balances.items()):
        if account.kind != AccountKind.PERSON:
            continue
        weight = max(0, balance)
        weights[account] = math.isqrt(weight) if rule == "sqrt" else weight
    return weights


def tally_split(ballots: Iterable[Ballot], measures: Sequence[Measure], budget) -> SplitTally:
    """Selección determinista de medidas por puntuación y presupuesto. El coste seleccionado no supera el presupuesto."""
    known = {m.id: m for m in measures}
    scores: dict[int, Fraction] = {m.id: Fraction(0) for m in measures}
    for ballot in ballots:
        if ballot.weight == 0 or not ballot.split:
            continue
        for measure_id, fraction in ballot.split.items():
            if measure_id in known:
                scores[measure_id] += ballot.weight * Fraction(fraction)

    selected = []
    spent = Decimal(0)
    budget = Decimal(budget)
    for measure_id in sorted(scores, key=lambda m: (-scores[m], m)):
        if scores[measure_id] <= 0:
            break
        cost = known[measure_id].cost
        if spent + cost <= budget:
            selected.append(measure_id)
            spent += cost
    return SplitTally(selected, scores)


def tally_bundle(ballots: Iterable[Ballot], bundles: Sequence[Bundle]) -> BundleTally:
    """Mayoría relativa por peso total; empate -> id de paquete menor. Sin votos no hay ganador."""
    totals = {b.id: 0 for b in bundles}
    for ballot in ballots:
        if ballot.weight == 0 or ballot.bundle is None:
            continue
        if ballot.bundle not in totals:
            logging.warning(f"Ballot of {ballot.voter} names unknown bundle {ballot.bundle}")
            continue
        totals[ballot.bundle] += ballot.weight
    ranked = sorted(totals, key=lambda b: (-totals[b], b))
    winner = ranked[0] if ranked and totals[ranked[0]] > 0 else None
    return BundleTally(winner, totals)


def apply_measures(network: NetworkState, selected: Iterable[Measure]) -> NetworkState:
    """
    Aplica los efectos de las medidas a la red. Los factores del mismo
    parámetro se multiplican en orden de valor, así el resultado no depende
    del orden de las medidas.
    """
    factors = defaultdict(list)
    availability = defaultdict(set)
    for measure in selected:
        for effect in measure.effects:
            if effect.mode not in network.modes:
                raise UnknownMode(effect.mode)
            if effect.parameter == EffectParameter.AVAILABILITY:
                availability[effect.mode].add(bool(effect.value))
            else:
                factors[(effect.mode, effect.parameter)].append(float(effect.value))

    modes = {}
    for mode, supply in network.modes.items():
        update = {}
        time_factors = factors.get((mode, EffectParameter.TRAVEL_TIME_FACTOR))
        if time_factors:
            update["travel_time_factor"] = supply.travel_time_factor * math.prod(sorted(time_factors))
        capacity_factors = factors.get((mode, EffectParameter.CAPACITY_FACTOR))
        if capacity_factors:
            update["capacity_factor"] = supply.capacity_factor * math.prod(sorted(capacity_factors))
        if mode in availability:
            # Si alguna medida habilita el modo, prevalece sobre las que lo retiran.
            update["available"] = True in availability[mode]
        modes[mode] = supply.model_copy(update=update) if update else supply
    return network.model_copy(update={"modes": modes})


def benefit_matrix(mode_ids: Sequence[str], measures: Sequence[Measure]) -> np.ndarray:
    """Matriz modos x medidas: True si la medida mejora el modo."""
    index = {mode: j for j, mode in enumerate(mode_ids)}
    matrix = np.zeros((len(mode_ids), len(measures)), dtype=bool)
    for k, measure in enumerate(measures):
        for effect in measure.effects:
            if effect.improves and effect.mode in index:
                matrix[index[effect.mode], k] = True
    return matrix


def build_ballots(
    weights: Mapping[AccountId, int],
    usage: np.ndarray,
    mode_ids: Sequence[str],
    measures: Sequence[Measure],
    bundles: Sequence[Bundle] = (),
    voting_mode: str = "split",
) -> list[Ballot]:
    """
    Papeletas de la población. Cada persona reparte su peso entre las medidas
    que mejoran los modos que ha usado, en proporción a sus viajes en ellos;
    en modo paquete vota el paquete con más puntuación. Quien no tiene viajes
    relevantes se abstiene.

    Args:
        weights: peso por persona (clave AccountId de tipo persona, índice = fila de `usage`).
        usage: viajes por persona y modo en el año (personas x modos).
    """
    relevance = usage @ benefit_matrix(mode_ids, measures).astype(np.int64)
    measure_pos = {m.id: k for k, m in enumerate(measures)}
    ballots = []
    for account, weight in weights.items():
        if weight <= 0:
            continue
        row = relevance[account.index]
        if voting_mode == "bundle":
            best, best_score = None, 0
            for bundle in sorted(bundles, key=lambda b: b.id):
                score = sum(int(row[measure_pos[m]]) for m in bundle.measures if m in measure_pos)
                if score > best_score:
                    best, best_score = bundle.id, score
            if best is not None:
                ballots.append(Ballot(voter=account, weight=weight, bundle=best))
            continue
        total = int(row.sum())
        if total == 0:
            continue
        split = {
            measures[k].id: (Decimal(int(row[k])) / total).quantize(_FRACTION_QUANTUM, rounding=ROUND_DOWN)
            for k in range(len(measures))
            if row[k] > 0
        }
        ballots.append(Ballot(voter=account, weight=weight, split=split))
    return ballots
