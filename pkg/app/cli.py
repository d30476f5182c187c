# app/cli.py
#
# Línea de comandos del simulador.
#
#   python -m app.cli run <config> --out <dir> [--seed N]
#   python -m app.cli validate <config>
#   python -m app.cli replay <events.jsonl> [--json]
#   python -m app.cli report <out-dir>
#   python -m app.cli serve [--host H] [--port P]
#
# Códigos de salida: 0 correcto; 1 error de esquema; 4 referencia colgante;
# 5 invariante del escenario; 2 error de ejecución; 3 fallo de integridad al reproducir.

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from app.exceptions import ConfigError, ReplayIntegrityError
from app.jobs.simulation.job import run_simulation_job
from app.models.ledger import Wallet, format_cents
from app.services.artifacts import SUMMARY_FILE, read_metrics, read_summary
from app.services.ledger import verify_log
from app.services.scenario import config_hash, load_config, reference_prices
from app.settings import configure_logging

EXIT_OK = 0
EXIT_RUNTIME = 2
EXIT_REPLAY = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobcoin", description="MobilityCoin agent-based simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write its artifacts")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--out", type=Path, required=True)
    run_p.add_argument("--seed", type=int, default=None, help="overrides the scenario seed")

    validate_p = sub.add_parser("validate", help="validate a scenario file")
    validate_p.add_argument("config", type=Path)

    replay_p = sub.add_parser("replay", help="replay an event log and verify its integrity")
    replay_p.add_argument("events", type=Path)
    replay_p.add_argument("--json", action="store_true", help="print the replayed wallets as JSON lines")

    report_p = sub.add_parser("report", help="print the summary of a finished run")
    report_p.add_argument("out_dir", type=Path)

    serve_p = sub.add_parser("serve", help="start the HTTP API")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    return parser


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return e.exit_code
    if args.seed is not None and args.seed < 0:
        print("seed must be non-negative", file=sys.stderr)
        return ConfigError.exit_code
    try:
        summary = run_simulation_job(config, args.out, seed=args.seed)
    except Exception as e:
        print(f"run failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"run completed: {summary['event_count']} events, artifacts in {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return e.exit_code
    print(f"scenario '{config.name}' is valid (config hash {config_hash(config)})")
    for mode, cents in reference_prices(config).items():
        print(f"  reference trip by {mode}: {format_cents(cents)} coins")
    return EXIT_OK


def cmd_replay(args) -> int:
    event_count = digest = None
    summary_path = args.events.parent / SUMMARY_FILE
    if summary_path.is_file():
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        event_count = summary.get("event_count")
        digest = summary.get("final_balances_sha256")
    try:
        balances = verify_log(args.events, event_count, digest)
    except ReplayIntegrityError as e:
        print(f"replay integrity failure: {e}", file=sys.stderr)
        return EXIT_REPLAY
    except OSError as e:
        print(f"cannot read event log: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    wallets = [Wallet(account=account, balance=amount) for account, amount in balances.items() if amount != 0]
    print("conservation: OK")
    for wallet in wallets:
        if args.json:
            print(wallet.model_dump_json())
        else:
            print(f"{wallet.account}\t{format_cents(wallet.balance)}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        summary = read_summary(args.out_dir)
        metrics = read_metrics(args.out_dir)
    except (OSError, ValueError) as e:
        print(f"cannot read run artifacts: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"scenario: {summary.get('scenario')}  status: {summary.get('status')}  seed: {summary.get('seed')}")
    print(f"events: {summary.get('event_count')}  config hash: {summary.get('config_hash')}")
    if metrics.empty:
        print("no metrics rows")
        return EXIT_OK
    last = metrics.iloc[-1]
    shares = {c[len("share_"):]: last[c] for c in metrics.columns if c.startswith("share_")}
    table = pd.DataFrame({"mode": list(shares), "share": list(shares.values())})
    print(f"modal split (day {int(last['day'])}):")
    print(table.to_string(index=False))
    kpis = summary.get("kpis", {})
    print(f"clearing price: {last['clearing_price']}  supply in circulation: {format_cents(int(last['supply_in_circulation_cents']))}")
    print(f"forced purchases: {kpis.get('forced_purchases')}  final gini: {kpis.get('final_gini')}")
    print(f"integrity: {summary.get('integrity')}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("main:app", host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "validate": cmd_validate,
    "replay": cmd_replay,
    "report": cmd_report,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    logging.debug(f"Running command {args.command}")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
