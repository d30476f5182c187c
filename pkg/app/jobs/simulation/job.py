# app/jobs/simulation/job.py
#
# Job por lotes que ejecuta un escenario completo y deja sus artefactos en
# disco. Lo usan la CLI (`run`) y la API (como tarea de fondo).

import logging
from pathlib import Path
from typing import Optional, Union

from app.models.scenario import ScenarioConfig
from app.services.scenario import load_config
from app.services.simulation import run
from app.settings import OUTPUT_ROOT


def run_dir(run_id: str, root: Optional[Path] = None) -> Path:
    """Directorio de artefactos de una corrida lanzada desde la API."""
    return Path(root or OUTPUT_ROOT) / run_id


def run_simulation_job(
    config: Union[ScenarioConfig, str, Path],
    out_dir: Union[str, Path],
    seed: Optional[int] = None,
) -> dict:
    """
    Función principal del job: carga el escenario si hace falta, lo ejecuta
    y devuelve el contenido de summary.json. Los errores se registran y se relanzan.
    """
    if not isinstance(config, ScenarioConfig):
        config = load_config(config)
    logging.info(f"Starting simulation job for scenario '{config.name}' into {out_dir}")
    try:
        summary = run(config, out_dir, seed=seed)
    except Exception as e:
        logging.error(f"Simulation job for scenario '{config.name}' failed: {e}")
        raise
    logging.info(
        f"Simulation job finished for scenario '{config.name}': "
        f"{summary['event_count']} events, status {summary['status']}"
    )
    return summary


def run_simulation_background(config: ScenarioConfig, run_id: str, seed: Optional[int] = None):
    """Variante para BackgroundTasks: el fallo queda en summary.json y en el log, sin relanzar."""
    try:
        run_simulation_job(config, run_dir(run_id), seed=seed)
    except Exception:
        logging.error(f"Background run {run_id} failed", exc_info=True)
