# app/routers/simulation.py
#
# Endpoint para lanzar una corrida en segundo plano. Protegido por la clave
# secreta compartida (MOBCOIN_API_SECRET).

from typing import Optional
from uuid import uuid4

from fastapi import APIRouter, BackgroundTasks, Body, HTTPException

from app.exceptions import ConfigError
from app.jobs.simulation.job import run_simulation_background
from app.routers.scenarios import config_error_detail
from app.services.scenario import parse_config
from app.settings import verify_secret

router = APIRouter()


@router.post("/run", status_code=202)
async def run_simulation(
    secret: str,
    background_tasks: BackgroundTasks,
    scenario: dict = Body(...),
    seed: Optional[int] = None,
):
    """
    Valida el escenario y lanza la simulación como tarea de fondo.

    - **secret**: la clave secreta para autenticar la petición.
    - **seed**: semilla opcional que sustituye a la del escenario.
    """
    if not verify_secret(secret):
        raise HTTPException(status_code=403, detail="Acceso denegado: Clave secreta inválida.")
    if seed is not None and seed < 0:
        raise HTTPException(status_code=422, detail="seed must be non-negative")
    try:
        config = parse_config(scenario)
    except ConfigError as e:
        raise HTTPException(status_code=422, detail=config_error_detail(e))

    run_id = uuid4().hex
    background_tasks.add_task(run_simulation_background, config, run_id, seed)
    return {"run_id": run_id, "message": "Simulation started in the background."}
