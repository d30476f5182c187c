# app/services/choice.py
#
# Elección modal previa al viaje como logit multinomial sobre el tiempo de
# viaje y el precio en monedas valorado al último precio de mercado.
#
# Utilidad de un modo:
#   U_m = asc_m - beta_time·t_m - beta_cost·(precio_m [monedas] · precio_mercado [céntimos fiat/moneda])
#
# Regla de muestreo: las probabilidades acumuladas se redondean a 12 decimales
# y la última se fija a 1; se elige el primer modo cuya acumulada supera u.

from typing import Sequence

import numpy as np

from app.exceptions import MissingOption
from app.models.choice import AgentProfile, ChoiceContext
from app.models.ledger import CENTS_PER_COIN

CDF_DECIMALS = 12


def option_utilities(profile: AgentProfile, ctx: ChoiceContext) -> dict[str, float]:
    """Utilidad de cada modo disponible , en el orden del perfil."""
    wanted = set(profile.available_modes)
    offered = set(ctx.options)
    if wanted != offered:
        raise MissingOption(wanted - offered, offered - wanted)
    market_price = float(ctx.market_price)
    utilities = {}
    for mode in profile.available_modes:
        option = ctx.options[mode]
        coins = option.coin_price / CENTS_PER_COIN
        utilities[mode] = (
            profile.asc.get(mode, 0.0)
            - profile.beta_time * option.travel_time
            - profile.beta_cost * coins * market_price
        )
    return utilities


def utility_matrix(
    asc: np.ndarray,
    beta_time: np.ndarray,
    beta_cost: np.ndarray,
    travel_time: np.ndarray,
    price_cents: np.ndarray,
    market_price: float,
    available: np.ndarray,
) -> np.ndarray:
    """
    Utilidades de toda la población (agentes x modos). Los modos no
    disponibles quedan con utilidad -inf.
    """
    coins = price_cents / CENTS_PER_COIN
    utilities = asc - beta_time[:, None] * travel_time - beta_cost[:, None] * coins * market_price
    return np.where(available, utilities, -np.inf)


def choice_probabilities(utilities, mu: float) -> np.ndarray:
    """
    P_m = exp(mu·U_m) / sum_k exp(mu·U_k), restando el máximo para evitar
    desbordamientos. Acepta un vector o una matriz (una fila por agente);
    las opciones con utilidad -inf reciben probabilidad 0.
    """
    if mu <= 0:
        raise ValueError("logit scale must be positive")
    u = np.asarray(utilities, dtype=float)
    scaled = np.multiply(mu, u)
    top = np.max(scaled, axis=-1, keepdims=True)
    weights = np.exp(scaled - top)
    return weights / weights.sum(axis=-1, keepdims=True)


def logsum(utilities, mu: float) -> np.ndarray:
    """Utilidad esperada del conjunto de opciones: (1/mu)·log sum exp(mu·U)."""
    u = np.asarray(utilities, dtype=float)
    scaled = np.multiply(mu, u)
    top = np.max(scaled, axis=-1)
    return (top + np.log(np.exp(scaled - top[..., None]).sum(axis=-1))) / mu


def _cdf(probabilities: np.ndarray) -> np.ndarray:
    cdf = np.round(np.cumsum(probabilities, axis=-1), CDF_DECIMALS)
    cdf[..., -1] = 1.0
    return cdf


def sample_choice(probabilities: Sequence[float], rng: np.random.Generator) -> int:
    """Muestreo por inversa de la función de distribución; devuelve el índice del modo."""
    u = rng.random()
    return inverse_cdf(probabilities, u)


def inverse_cdf(probabilities: Sequence[float], u: float) -> int:
    cdf = _cdf(np.asarray(probabilities, dtype=float))
    return int(np.searchsorted(cdf, u, side="right"))


def sample_choices(probabilities: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Versión por lotes de `inverse_cdf`: una fila de probabilidades y un u por agente."""
    cdf = _cdf(probabilities)
    picks = (cdf <= uniforms[:, None]).sum(axis=1)
    return np.minimum(picks, probabilities.shape[1] - 1)
