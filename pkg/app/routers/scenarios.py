# app/routers/scenarios.py
#
# Endpoint para validar un escenario sin ejecutarlo.

import logging

from fastapi import APIRouter, Body, HTTPException

from app.exceptions import ConfigError
from app.services.scenario import config_hash, parse_config, reference_prices

router = APIRouter()


def config_error_detail(e: ConfigError) -> dict:
    return {"error": type(e).__name__, "message": str(e), "exit_code": e.exit_code}


@router.post("/validate")
async def validate_scenario(scenario: dict = Body(...)):
    """
    Valida un escenario (esquema, referencias e invariantes).

    - **scenario**: el contenido del fichero JSON del escenario.
    """
    try:
        config = parse_config(scenario)
    except ConfigError as e:
        raise HTTPException(status_code=422, detail=config_error_detail(e))
    except Exception as e:
        logging.error(f"Unexpected error validating scenario: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Error interno del servidor: {e}")
    return {
        "valid": True,
        "name": config.name,
        "config_hash": config_hash(config),
        "reference_prices_cents": reference_prices(config),
    }
