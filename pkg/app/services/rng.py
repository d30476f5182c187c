# app/services/rng.py
#
# Aleatoriedad determinista de la simulación. Todo sale de una única semilla
# a través de subflujos con nombre (SeedSequence con spawn_key), de modo que
# añadir un consumidor nuevo no altera los números de los demás.
#
# Por día se extrae una matriz de uniformes de tamaño fijo (agentes x usos),
# se usen o no; así el consumo de cada agente no depende de lo que hagan los demás.

from typing import Optional

import numpy as np

# Columnas de la matriz diaria de uniformes por agente.
U_WFH = 0
U_MODE = 1
U_BUSINESS = 2
U_TRADE = 3
AGENT_DRAWS = 4

_PURPOSES = {
    "population": 0,
    "agents": 1,
    "deliveries": 2,
}


class SeedStreams:
    """Fábrica de generadores numpy independientes derivados de una semilla."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed

    def generator(self, purpose: str, *key: int) -> np.random.Generator:
        try:
            code = _PURPOSES[purpose]
        except KeyError:
            raise ValueError(f"unknown random stream '{purpose}'")
        sequence = np.random.SeedSequence(self.seed, spawn_key=(code, *key))
        return np.random.Generator(np.random.PCG64(sequence))

    def agent_uniforms(self, day: int, n_agents: int) -> np.ndarray:
        """Uniformes del día: una fila por agente, columnas U_WFH, U_MODE, U_BUSINESS, U_TRADE."""
        return self.generator("agents", day).random((n_agents, AGENT_DRAWS))

    def deliveries(self, day: int) -> np.random.Generator:
        return self.generator("deliveries", day)


def resolve_seed(config_seed: int, override: Optional[int] = None) -> int:
    """La semilla de la línea de comandos, si se da, prevalece sobre la del escenario."""
    return config_seed if override is None else override
