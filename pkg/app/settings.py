# app/settings.py
#
# Configuración del proceso a partir de variables de entorno.
# Los parámetros del escenario NO viven aquí: van en el fichero JSON del escenario.

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# Carga las variables de entorno (fichero .env si existe).
load_dotenv()

LOG_LEVEL = os.getenv("MOBCOIN_LOG_LEVEL", "INFO").upper()
OUTPUT_ROOT = Path(os.getenv("MOBCOIN_OUTPUT_ROOT", "runs"))
API_SECRET = os.getenv("MOBCOIN_API_SECRET", "mobcoin-dev-secret")


def configure_logging():
    """Configuración básica de logging, compartida por la API y la CLI."""
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )


def verify_secret(secret: str) -> bool:
    """
    Verifica que la clave secreta proporcionada coincida.
    """
    return secret == API_SECRET
