# app/services/artifacts.py
#
# Escritura y lectura de los artefactos de una corrida:
#   events.jsonl  - un LedgerEvent por línea, en orden de seq
#   metrics.csv   - una fila MetricsRow por día
#   market.csv    - una fila por sesión de mercado
#   voting.csv    - una fila por medida y año
#   summary.json  - hash de configuración, semilla, KPIs y comprobaciones de integridad

import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional

import pandas as pd

from app.models.ledger import LedgerRecord

EVENTS_FILE = "events.jsonl"
METRICS_FILE = "metrics.csv"
MARKET_FILE = "market.csv"
VOTING_FILE = "voting.csv"
SUMMARY_FILE = "summary.json"

ARTIFACTS = (EVENTS_FILE, METRICS_FILE, MARKET_FILE, VOTING_FILE, SUMMARY_FILE)

MARKET_COLUMNS = ["day", "clearing_price", "volume_cents", "fees_cents", "n_orders"]
VOTING_COLUMNS = ["year", "measure_id", "score", "selected"]


@lru_cache(maxsize=65536)
def _quote(text: str) -> str:
    return json.dumps(text)


def event_line(record: LedgerRecord, names: Optional[dict] = None) -> str:
    """Línea de events.jsonl de un evento: el mismo texto que json.dumps(to_record()) compacto."""
    seq, day, kind, source, target, amount, memo = record
    if names is None:
        source_name, target_name = str(source), str(target)
    else:
        source_name = names.get(source) or names.setdefault(source, str(source))
        target_name = names.get(target) or names.setdefault(target, str(target))
    return (
        f'{{"seq":{seq},"day":{day},"kind":"{kind.value}","from":"{source_name}","to":"{target_name}",'
        f'"amount_cents":{amount},"memo":{_quote(memo)}}}\n'
    )


class EventLogWriter:
    """
    Sumidero del libro de cuentas: escribe los eventos confirmados en
    events.jsonl. Las líneas se acumulan y se vuelcan en bloques.
    """

    def __init__(self, path: Path, buffer_lines: int = 16384):
        self.path = Path(path)
        self.count = 0
        self.buffer_lines = buffer_lines
        self._buffer: list[str] = []
        self._names: dict = {}
        self._handle = open(self.path, "w", encoding="utf-8", newline="\n")

    def write_many(self, records: Iterable[LedgerRecord]):
        names = self._names
        lines = [event_line(record, names) for record in records]
        self._buffer.extend(lines)
        self.count += len(lines)
        if len(self._buffer) >= self.buffer_lines:
            self.flush()

    def flush(self):
        if self._buffer:
            self._handle.write("".join(self._buffer))
            self._buffer.clear()

    def close(self):
        if not self._handle.closed:
            self.flush()
            self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _write_csv(path: Path, rows: list[dict], columns: Optional[list[str]] = None):
    df = pd.DataFrame(rows, columns=columns) if columns else pd.DataFrame(rows)
    df.to_csv(path, index=False, lineterminator="\n")


def write_metrics(out_dir: Path, rows: Iterable[dict], columns: list[str]):
    _write_csv(Path(out_dir) / METRICS_FILE, list(rows), columns)


def write_market(out_dir: Path, rows: Iterable[dict]):
    _write_csv(Path(out_dir) / MARKET_FILE, list(rows), MARKET_COLUMNS)


def write_voting(out_dir: Path, rows: Iterable[dict]):
    _write_csv(Path(out_dir) / VOTING_FILE, list(rows), VOTING_COLUMNS)


def write_summary(out_dir: Path, summary: dict):
    path = Path(out_dir) / SUMMARY_FILE
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    logging.info(f"Summary written to {path} (status {summary.get('status')})")


def read_summary(out_dir: Path) -> dict:
    return json.loads((Path(out_dir) / SUMMARY_FILE).read_text(encoding="utf-8"))


def read_metrics(out_dir: Path) -> pd.DataFrame:
    return pd.read_csv(Path(out_dir) / METRICS_FILE)
