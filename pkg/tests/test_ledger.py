# tests/test_ledger.py
#
# Tests del libro de cuentas: anexado, lotes atómicos, reproducción y conservación.

import os
import sys
# Añade el directorio raíz del proyecto al sys.path para que los módulos puedan ser encontrados.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.exceptions import (
    InsufficientBalance,
    InvalidEventRoute,
    NegativeBalanceAt,
    ReplayIntegrityError,
    SequenceGap,
    UnknownAccount,
)
from app.models.ledger import AGENCY, EventKind, LedgerEvent, LedgerRecord, Posting, employer, format_cents, person, to_cents
from app.services.artifacts import EventLogWriter, event_line
from app.services.ledger import (
    Ledger,
    balance_digest,
    conservation_check,
    read_event_log,
    replay,
    serialize_balances,
    verify_log,
)


def make_ledger(n_persons=5):
    ledger = Ledger()
    for i in range(n_persons):
        ledger.open_account(person(i))
    return ledger


def test_allocation_credits_person():
    ledger = make_ledger(4)
    ledger.commit_batch(0, [Posting(EventKind.ALLOCATION, AGENCY, person(3), to_cents("1000.00"))])
    assert ledger.balance(person(3)) == 100000
    assert ledger.balance(AGENCY) == -100000


def test_trip_charge_can_empty_a_balance():
    ledger = make_ledger(4)
    ledger.commit_batch(0, [Posting(EventKind.ALLOCATION, AGENCY, person(3), 1500)])
    ledger.commit_batch(0, [Posting(EventKind.TRIP_CHARGE, person(3), AGENCY, 1500)])
    assert ledger.balance(person(3)) == 0


def test_overdraft_is_rejected_and_nothing_is_committed():
    ledger = make_ledger(4)
    ledger.commit_batch(0, [Posting(EventKind.ALLOCATION, AGENCY, person(3), 1500)])
    with pytest.raises(InsufficientBalance) as excinfo:
        ledger.commit_batch(1, [Posting(EventKind.TRIP_CHARGE, person(3), AGENCY, 2000)])
    assert excinfo.value.shortfall == 500
    assert ledger.balance(person(3)) == 1500
    assert ledger.next_seq == 1


def test_batch_is_atomic():
    """Si una pata del lote falla, ninguna entra."""
    ledger = make_ledger(2)
    ledger.open_account(employer(0))
    legs = [
        Posting(EventKind.ALLOCATION, AGENCY, person(0), 1000),
        Posting(EventKind.TRIP_CHARGE, person(1), AGENCY, 500),
    ]
    with pytest.raises(InsufficientBalance):
        ledger.commit_batch(0, legs)
    assert ledger.balance(person(0)) == 0
    assert ledger.next_seq == 0


def test_batch_prefixes_are_checked_in_order():
    """Con el abono antes que el cargo el lote entra; al revés no."""
    ledger = make_ledger(1)
    ledger.open_account(employer(0))
    ledger.commit_batch(0, [Posting(EventKind.ALLOCATION, AGENCY, person(0), 0)])
    with pytest.raises(InsufficientBalance):
        ledger.commit_batch(0, [
            Posting(EventKind.TRIP_CHARGE, person(0), AGENCY, 800),
            Posting(EventKind.ALLOCATION, AGENCY, person(0), 800),
        ])
    events = ledger.commit_batch(0, [
        Posting(EventKind.ALLOCATION, AGENCY, person(0), 800),
        Posting(EventKind.TRIP_CHARGE, person(0), AGENCY, 800),
    ])
    assert [e.seq for e in events] == [0, 1]
    assert ledger.balance(person(0)) == 0


def test_append_event_checks_sequence():
    ledger = make_ledger(1)
    event = LedgerEvent(seq=1, day=0, kind=EventKind.ALLOCATION, source=AGENCY, target=person(0), amount_cents=10)
    with pytest.raises(SequenceGap):
        ledger.append_event(event)
    updated = ledger.append_event(event.model_copy(update={"seq": 0}))
    assert updated == {AGENCY: -10, person(0): 10}


def test_append_event_checks_route():
    ledger = make_ledger(1)
    event = LedgerEvent(seq=0, day=0, kind=EventKind.TRIP_CHARGE, source=AGENCY, target=person(0), amount_cents=10)
    with pytest.raises(InvalidEventRoute):
        ledger.append_event(event)


def test_event_record_uses_log_field_names():
    event = LedgerEvent(seq=0, day=2, kind=EventKind.TRIP_CHARGE, source=person(3), target=AGENCY,
                        amount_cents=1500, memo="commute:2:bus")
    assert event.to_record() == {
        "seq": 0, "day": 2, "kind": "TripCharge", "from": "person:3", "to": "agency:0",
        "amount_cents": 1500, "memo": "commute:2:bus",
    }


def test_replay_of_empty_stream():
    balances = replay([])
    assert all(v == 0 for v in balances.values())
    assert conservation_check(balances)


def test_replay_detects_negative_balance():
    events = [LedgerEvent(seq=0, day=0, kind=EventKind.TRIP_CHARGE, source=person(0), target=AGENCY, amount_cents=100)]
    with pytest.raises(NegativeBalanceAt) as excinfo:
        replay(events)
    assert excinfo.value.seq == 0


def test_replay_detects_sequence_gap():
    events = [
        LedgerEvent(seq=0, day=0, kind=EventKind.ALLOCATION, source=AGENCY, target=person(0), amount_cents=100),
        LedgerEvent(seq=2, day=0, kind=EventKind.TRIP_CHARGE, source=person(0), target=AGENCY, amount_cents=100),
    ]
    with pytest.raises(SequenceGap):
        replay(events)


def test_conservation_after_allocation_and_expiry():
    ledger = make_ledger(10)
    ledger.commit_batch(0, [Posting(EventKind.ALLOCATION, AGENCY, person(i), 100000) for i in range(10)])
    assert ledger.balance(AGENCY) == -1000000
    assert conservation_check(ledger.balances())
    ledger.commit_batch(364, [Posting(EventKind.EXPIRY, person(i), AGENCY, 100000) for i in range(10)])
    assert conservation_check(ledger.balances())


@given(st.lists(
    st.tuples(
        st.sampled_from(["allocation", "charge", "trade", "expiry"]),
        st.integers(0, 4),
        st.integers(0, 4),
        st.integers(1, 5000),
    ),
    min_size=1,
    max_size=200,
))
@settings(max_examples=50, deadline=None)
def test_replay_matches_incremental_state(ops):
    ledger = make_ledger(5)
    for day, (op, a, b, amount) in enumerate(ops):
        if op == "allocation":
            leg = Posting(EventKind.ALLOCATION, AGENCY, person(a), amount)
        elif op == "charge":
            leg = Posting(EventKind.TRIP_CHARGE, person(a), AGENCY, amount)
        elif op == "trade":
            if a == b:
                continue
            leg = Posting(EventKind.TRADE, person(a), person(b), amount)
        else:
            leg = Posting(EventKind.EXPIRY, person(a), AGENCY, amount)
        try:
            ledger.commit_batch(day, [leg])
        except InsufficientBalance:
            continue
    events = ledger.events
    first = replay(events)
    assert serialize_balances(first) == serialize_balances(ledger.balances())
    assert serialize_balances(replay(events)) == serialize_balances(first)


def test_conservation_over_random_batches():
    """1.000 lotes aleatorios de varias patas: la suma global es cero tras cada uno."""
    rng = np.random.default_rng(11)
    ledger = make_ledger(8)
    ledger.open_account(employer(0))
    for day in range(1000):
        legs = []
        for _ in range(int(rng.integers(1, 5))):
            a, b = (int(x) for x in rng.integers(0, 8, size=2))
            amount = int(rng.integers(1, 3000))
            kind = rng.integers(0, 4)
            if kind == 0:
                legs.append(Posting(EventKind.ALLOCATION, AGENCY, person(a), amount))
            elif kind == 1:
                legs.append(Posting(EventKind.TRIP_CHARGE, person(a), AGENCY, amount))
            elif kind == 2 and a != b:
                legs.append(Posting(EventKind.TRADE, person(a), person(b), amount))
            else:
                legs.append(Posting(EventKind.TRADE, person(a), employer(0), amount))
        before = ledger.balances()
        try:
            ledger.commit_batch(day, legs)
        except InsufficientBalance:
            assert ledger.balances() == before
        balances = ledger.balances()
        assert conservation_check(balances)
        assert all(v >= 0 for account, v in balances.items() if account != AGENCY)


def test_event_log_round_trip_and_tamper_detection(tmp_path):
    path = tmp_path / "events.jsonl"
    with EventLogWriter(path) as writer:
        ledger = Ledger(sink=writer)
        for i in range(3):
            ledger.open_account(person(i))
        ledger.commit_batch(0, [Posting(EventKind.ALLOCATION, AGENCY, person(i), 5000) for i in range(3)])
        ledger.commit_batch(1, [Posting(EventKind.TRIP_CHARGE, person(1), AGENCY, 1500, "commute:1:bus")])
    assert writer.count == 4

    events = list(read_event_log(path))
    assert [e.seq for e in events] == [0, 1, 2, 3]
    digest = balance_digest(ledger.balances())
    balances = verify_log(path, event_count=4, digest=digest)
    assert balances[person(1)] == 3500

    lines = path.read_text().splitlines()
    record = json.loads(lines[0])
    record["amount_cents"] += 100
    lines[0] = json.dumps(record, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ReplayIntegrityError):
        verify_log(path, event_count=4, digest=digest)


def test_format_cents():
    assert format_cents(1500) == "15.00"
    assert format_cents(-905) == "-9.05"
    assert to_cents("15.00") == 1500


@pytest.mark.parametrize("memo", ["", "commute:2:bus", 'quote " and \\ slash', "peaje ñ €"])
def test_event_line_is_compact_json_of_the_record(memo):
    record = LedgerRecord(7, 2, EventKind.REIMBURSEMENT, employer(1), person(3), 1500, memo)
    event = LedgerEvent(seq=7, day=2, kind=EventKind.REIMBURSEMENT, source=employer(1), target=person(3),
                        amount_cents=1500, memo=memo)
    expected = json.dumps(event.to_record(), separators=(",", ":")) + "\n"
    assert event_line(record) == expected
    assert event_line(record, {}) == expected
    assert LedgerEvent.model_validate_json(expected) == event


def test_writer_buffers_until_flushed(tmp_path):
    path = tmp_path / "events.jsonl"
    writer = EventLogWriter(path, buffer_lines=3)
    ledger = Ledger(sink=writer)
    ledger.open_account(person(0))
    ledger.commit_batch(0, [Posting(EventKind.ALLOCATION, AGENCY, person(0), 100)])
    assert path.read_text() == ""
    ledger.commit_batch(1, [Posting(EventKind.TRIP_CHARGE, person(0), AGENCY, 10) for _ in range(2)])
    writer.close()
    assert len(path.read_text().splitlines()) == 3
    assert writer.count == 3


def test_commit_returns_sequenced_records():
    ledger = make_ledger(2)
    ledger.commit_batch(0, [Posting(EventKind.ALLOCATION, AGENCY, person(0), 1000)])
    records = ledger.commit_batch(1, [
        Posting(EventKind.TRADE, person(0), person(1), 400, "trade:0:1"),
        Posting(EventKind.TRIP_CHARGE, person(1), AGENCY, 400),
    ])
    assert all(isinstance(r, LedgerRecord) for r in records)
    assert [(r.seq, r.day, r.source, r.target, r.amount_cents) for r in records] == [
        (1, 1, person(0), person(1), 400),
        (2, 1, person(1), AGENCY, 400),
    ]
    assert ledger.balances_for([person(1), person(0)]) == [0, 600]
    with pytest.raises(UnknownAccount):
        ledger.balances_for([person(9)])
