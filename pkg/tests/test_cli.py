# tests/test_cli.py
#
# Tests de la línea de comandos: códigos de salida y coherencia entre run, report y replay.

import os
import sys
# Añade el directorio raíz del proyecto al sys.path para que los módulos puedan ser encontrados.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import json

import pandas as pd
import pytest

from app.cli import EXIT_OK, EXIT_REPLAY, EXIT_RUNTIME, main
from app.services.artifacts import EVENTS_FILE, METRICS_FILE, SUMMARY_FILE


@pytest.fixture
def small_path(small_dict, tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(small_dict), encoding="utf-8")
    return path


def write_config(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_validate_reference(reference_path, capsys):
    assert main(["validate", reference_path]) == EXIT_OK
    assert "bus: 15.00" in capsys.readouterr().out


def test_validate_exit_codes(reference_dict, tmp_path):
    broken = json.loads(json.dumps(reference_dict))
    broken["market"]["price_floor"] = -1
    assert main(["validate", str(write_config(tmp_path, broken, "schema.json"))]) == 1

    dangling = json.loads(json.dumps(reference_dict))
    dangling["schedule"]["rates"]["tram"] = {"rate_dist": 100}
    assert main(["validate", str(write_config(tmp_path, dangling, "dangling.json"))]) == 4

    invariant = json.loads(json.dumps(reference_dict))
    invariant["schedule"]["rates"]["bike"] = {"rate_dist": 50}
    invariant["schedule"]["rates"]["walk"] = {"rate_dist": 10}
    assert main(["validate", str(write_config(tmp_path, invariant, "invariant.json"))]) == 5

    assert main(["validate", str(tmp_path / "missing.json")]) == 1


def test_run_then_report_and_replay(small_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(small_path), "--out", str(out)]) == EXIT_OK
    for name in (EVENTS_FILE, METRICS_FILE, SUMMARY_FILE, "market.csv", "voting.csv"):
        assert (out / name).is_file()
    capsys.readouterr()

    assert main(["report", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out
    metrics = pd.read_csv(out / METRICS_FILE)
    last = metrics.iloc[-1]
    shares = {c[len("share_"):]: last[c] for c in metrics.columns if c.startswith("share_")}
    table = pd.DataFrame({"mode": list(shares), "share": list(shares.values())})
    assert f"modal split (day {int(last['day'])}):" in printed
    assert table.to_string(index=False) in printed

    assert main(["replay", str(out / EVENTS_FILE)]) == EXIT_OK
    assert "conservation: OK" in capsys.readouterr().out

    assert main(["replay", str(out / EVENTS_FILE), "--json"]) == EXIT_OK
    wallets = [json.loads(line) for line in capsys.readouterr().out.splitlines()[1:]]
    assert sum(w["balance"] for w in wallets) == 0
    assert all(w["balance"] > 0 for w in wallets if w["account"] != "agency:0")
    assert all(w["account"].split(":")[0] in ("person", "employer", "merchant", "agency") for w in wallets)


def test_tampered_log_fails_replay(small_path, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(small_path), "--out", str(out)]) == EXIT_OK
    events = out / EVENTS_FILE
    lines = events.read_text(encoding="utf-8").splitlines()
    record = json.loads(lines[0])
    record["amount_cents"] += 100
    lines[0] = json.dumps(record, separators=(",", ":"))
    events.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main(["replay", str(events)]) == EXIT_REPLAY


def test_runtime_failure_exit_code(small_dict, tmp_path):
    small_dict["market"]["agency_reserve"] = 0
    small_dict["allocation"]["base_per_person"] = 0
    small_dict["allocation"]["low_access_bonus"] = 0
    path = write_config(tmp_path, small_dict)
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == EXIT_RUNTIME
    assert json.loads((out / SUMMARY_FILE).read_text())["status"] == "failed"


def test_report_without_artifacts(tmp_path):
    assert main(["report", str(tmp_path)]) == EXIT_RUNTIME
