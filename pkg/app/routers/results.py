# app/routers/results.py
#
# Endpoint para consultar los artefactos de una corrida lanzada desde la API.

import json

import pandas as pd
from fastapi import APIRouter, HTTPException, Path
from fastapi.responses import PlainTextResponse

from app.jobs.simulation.job import run_dir
from app.services.artifacts import ARTIFACTS, SUMMARY_FILE
from app.settings import verify_secret

router = APIRouter()


@router.get("/results/{run_id}/{artifact}")
async def get_run_artifact(
    secret: str,
    run_id: str = Path(..., pattern=r"^[0-9a-f]{32}$"),
    artifact: str = Path(...),
):
    """
    Devuelve un artefacto de la corrida: summary.json como objeto, los CSV
    como lista de filas y events.jsonl como texto.

    - **run_id**: identificador devuelto por POST /run.
    - **secret**: la clave secreta para autenticar la petición.
    """
    if not verify_secret(secret):
        raise HTTPException(status_code=403, detail="Acceso denegado: Clave secreta inválida.")
    if artifact not in ARTIFACTS:
        raise HTTPException(status_code=404, detail=f"Unknown artifact '{artifact}'")
    path = run_dir(run_id) / artifact
    if not path.is_file():
        raise HTTPException(status_code=404, detail=f"No se encontró '{artifact}' para la corrida {run_id}")

    try:
        if artifact == SUMMARY_FILE:
            return json.loads(path.read_text(encoding="utf-8"))
        if artifact.endswith(".csv"):
            df = pd.read_csv(path)
            return json.loads(df.to_json(orient="records"))
        return PlainTextResponse(path.read_text(encoding="utf-8"), media_type="application/x-ndjson")
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error interno del servidor: {e}")
