# app/services/metrics.py
#
# Indicadores diarios: reparto modal, emisiones aproximadas y desigualdad
# de saldos (coeficiente de Gini).

from typing import Sequence

import numpy as np


def modal_split(trips_per_mode: np.ndarray, mode_ids: Sequence[str]) -> dict[str, float]:
    """Cuota de viajes de cada modo. Sin viajes, todas las cuotas son 0."""
    counts = np.asarray(trips_per_mode, dtype=float)
    total = counts.sum()
    if total == 0:
        return {mode: 0.0 for mode in mode_ids}
    return {mode: float(counts[j] / total) for j, mode in enumerate(mode_ids)}


def gini(values) -> float:
    """
    Coeficiente de Gini de una distribución no negativa, en [0, 1].
    0 con todos los saldos iguales (o todos a cero).
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0 or x.sum() == 0:
        return 0.0
    ranks = np.arange(1, n + 1)
    g = (2.0 * np.sum(ranks * x)) / (n * x.sum()) - (n + 1.0) / n
    return float(min(max(g, 0.0), 1.0))


def emissions(km_per_mode: np.ndarray, emission_factors: np.ndarray) -> float:
    """gCO2 totales: persona-km por modo por factor de emisión del modo."""
    return float(np.dot(np.asarray(km_per_mode, dtype=float), np.asarray(emission_factors, dtype=float)))
