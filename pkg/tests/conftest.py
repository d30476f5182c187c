# tests/conftest.py
#
# Fixtures compartidas: el escenario de referencia como dict y una versión
# reducida (pocos agentes, años cortos) para las pruebas de simulación.

import copy
import json
import os

import pytest

REFERENCE_PATH = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "scenarios", "reference.json"))


@pytest.fixture
def reference_path():
    return REFERENCE_PATH


@pytest.fixture
def reference_dict():
    with open(REFERENCE_PATH, "r", encoding="utf-8") as handle:
        return json.load(handle)


@pytest.fixture
def small_dict(reference_dict):
    """60 personas, años de 28 días, una sesión de mercado por semana."""
    data = copy.deepcopy(reference_dict)
    data["name"] = "small"
    data["seed"] = 7
    data["population"]["count"] = 60
    data["allocation"]["period"] = 28
    data["network"]["modes"]["car"]["capacity"] = 50
    data["commute"]["business_trip_rate"] = 0.05
    return data
