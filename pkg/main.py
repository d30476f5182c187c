# main.py

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.routers import results, scenarios, simulation
from app.settings import OUTPUT_ROOT, configure_logging

configure_logging()


# Gestor del ciclo de vida de la aplicación
@asynccontextmanager
async def lifespan(app: FastAPI):
    # Directorio donde las corridas lanzadas por la API escriben sus artefactos
    OUTPUT_ROOT.mkdir(parents=True, exist_ok=True)
    logging.info(f"MobilityCoin API ready; runs are written to {OUTPUT_ROOT}")
    yield


app = FastAPI(
    title="MobilityCoin Simulator API",
    description="API para validar escenarios de MobilityCoin, lanzar simulaciones y consultar sus resultados.",
    version="0.1.0",
    lifespan=lifespan,
)

# Configuración de CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Incluimos los routers
app.include_router(scenarios.router, prefix="/api/scenarios", tags=["scenarios"])
app.include_router(simulation.router, prefix="/api/simulation", tags=["simulation"])
app.include_router(results.router, prefix="/api/simulation", tags=["results"])


@app.get("/")
def read_root():
    """Endpoint de bienvenida para la API."""
    return {"message": "Welcome to the MobilityCoin Simulator API"}
