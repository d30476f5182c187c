# app/services/simulation.py
#
# Bucle diario y anual de la simulación. Orden fijo de fases en cada día:
#   1. estado del tráfico a partir de la demanda del día anterior
#   2. por agente: teletrabajo o trayecto (precio, elección, liquidación)
#   3. repartos a domicilio
#   4. sesión de mercado (si toca)
#   5. fila de métricas y comprobación de conservación
# Al final de cada año: votación, caducidad, ajuste de la oferta y nueva asignación.
#
# La evaluación de utilidades es vectorial; la liquidación se hace en orden
# de cuenta, así los resultados no dependen de cómo se calcule lo anterior.

import logging
from collections import defaultdict
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Optional, Union

import numpy as np

from app.exceptions import LedgerError
from app.models.ledger import AGENCY, AccountId, AccountKind, EventKind, Posting, employer, format_cents, merchant
from app.models.flows import CommutePolicy, DeliveryQuery
from app.models.market import Order, Side
from app.models.pricing import TripQuery
from app.models.scenario import MetricsRow, ScenarioConfig
from app.services import agency, voting
from app.services.artifacts import (
    EVENTS_FILE,
    EventLogWriter,
    write_market,
    write_metrics,
    write_summary,
    write_voting,
)
from app.services.choice import choice_probabilities, logsum, sample_choices, utility_matrix
from app.services.flows import (
    DayKind,
    SettlementDesk,
    employer_replenishment,
    settle_business_trip,
    settle_commute,
    settle_delivery,
)
from app.services.ledger import Ledger, balance_digest, conservation_check
from app.services.market import AgencyReserve, FiatBook, OrderBook, clear_session, settlement_postings, submit_order
from app.services.metrics import emissions, gini, modal_split
from app.services.network import traffic_state
from app.services.pricing import DailyEarnCap, price_matrix, trip_price
from app.services.rng import U_BUSINESS, U_MODE, U_TRADE, U_WFH, SeedStreams, resolve_seed
from app.services.scenario import build_contracts, build_population, config_hash, reference_prices

_LIMIT_QUANTUM = Decimal("0.01")


class Simulation:
    """
    Estado completo de una corrida: libro de cuentas, red, precio de mercado,
    población y acumulados del año en curso.

    Args:
        config: escenario validado.
        seed: semilla que sustituye a la del escenario.
        sink: destino de los eventos confirmados (ver EventLogWriter).
    """

    def __init__(self, config: ScenarioConfig, seed: Optional[int] = None, sink=None):
        self.config = config
        self.seed = resolve_seed(config.seed, seed)
        self.streams = SeedStreams(self.seed)
        self.mode_ids = config.mode_ids
        self.schedule = config.schedule
        self.network = config.network
        self.rules = config.market
        self.period = config.allocation.period

        self.profiles = build_population(config, self.streams)
        self.contracts = build_contracts(config, self.profiles)
        self.accounts = [p.account for p in self.profiles]
        self.employers = [employer(e.id) for e in sorted(config.employers, key=lambda e: e.id)]
        self.merchants = sorted(config.merchants, key=lambda m: m.id)
        position = {account: k for k, account in enumerate(self.employers)}
        self.employer_of = [c.employer if c is not None else None for c in self.contracts]
        self.employer_pos = np.array([position[e] if e is not None else -1 for e in self.employer_of], dtype=np.int64)
        self.members = [np.flatnonzero(self.employer_pos == k) for k in range(len(self.employers))]
        self.job_ticket = np.array(
            [c is not None and c.commute_policy == CommutePolicy.JOB_TICKET for c in self.contracts], dtype=bool
        )
        self.wfh_allowance = np.array(
            [c.allowance if c is not None and c.commute_policy == CommutePolicy.WFH_ALLOWANCE else 0 for c in self.contracts],
            dtype=np.int64,
        )

        self.ledger = Ledger(sink=sink, keep_events=False)
        for account in self.accounts + self.employers + [merchant(m.id) for m in self.merchants]:
            self.ledger.open_account(account)

        self.reserve = AgencyReserve(self.rules.agency_reserve)
        self.fiat = FiatBook()
        self.earn_cap = DailyEarnCap(len(self.profiles), config.e_max)
        self.price = self.rules.initial_price
        self.desk = SettlementDesk(self.ledger, self.rules, self.reserve, self.fiat, self.earn_cap, self.price)

        self._build_arrays()
        n, m = len(self.profiles), len(self.mode_ids)
        self.prev_demand = np.zeros(m)
        self.usage = np.zeros((n, m), dtype=np.int64)
        self.year_trips = np.zeros(m, dtype=np.int64)
        self.catalog = list(config.voting.measures)
        self.implemented: set[int] = set()
        self.outflow: dict[AccountId, int] = defaultdict(int)
        self.allocation_total = 0
        self.conservation_ok = True

        self.metrics_rows: list[dict] = []
        self.market_rows: list[dict] = []
        self.voting_rows: list[dict] = []
        self.years: list[dict] = []

    # --- Preparación ---

    def _build_arrays(self):
        modes = self.mode_ids
        n, m = len(self.profiles), len(modes)
        population = self.config.population
        self.distance = np.zeros((n, m))
        self.duration_base = np.zeros((n, m))
        self.available = np.zeros((n, m), dtype=bool)
        self.asc = np.zeros((n, m))
        self.beta_time = np.zeros(n)
        self.beta_cost = np.zeros(n)
        self.mu = np.ones(n)
        self.wfh_eligible = np.zeros(n, dtype=bool)
        self.employed = np.array([c is not None for c in self.contracts], dtype=bool)
        for i, profile in enumerate(self.profiles):
            for j, mode in enumerate(modes):
                if mode in profile.available_modes:
                    self.available[i, j] = True
                    self.distance[i, j] = float(profile.od_distance[mode])
                    self.duration_base[i, j] = profile.od_duration_base[mode]
                self.asc[i, j] = profile.asc.get(mode, 0.0)
            self.beta_time[i] = profile.beta_time
            self.beta_cost[i] = profile.beta_cost
            self.mu[i] = profile.logit_scale
            self.wfh_eligible[i] = profile.wfh_eligible
        self.wfh_asc = population.wfh_asc
        self.occupancy = np.array([self.config.commute.occupancy.get(mode, 1) for mode in modes], dtype=float)
        self.emission_factors = np.array([float(mode.emission_factor) for mode in self.config.modes])

    @property
    def n_days(self) -> int:
        return self.config.horizon_years * self.period

    # --- Día ---

    def _track(self, events):
        """Salidas de empleadores y comercios desde la última sesión (para reponer saldo)."""
        for event in events:
            if event.source.kind in (AccountKind.EMPLOYER, AccountKind.MERCHANT):
                self.outflow[event.source] += event.amount_cents

    def _business_price(self, states: dict) -> Optional[int]:
        commute = self.config.commute
        mode = commute.business_trip_mode
        if commute.business_trip_rate == 0 or mode is None or not self.network.modes[mode].available:
            return None
        ref = self.config.reference_od
        ref_distance = ref.distance[mode]
        duration = Decimal(0)
        if ref_distance > 0:
            duration = Decimal(repr(ref.duration[mode])) * commute.business_trip_km / ref_distance
        if commute.business_trip_km == 0 and duration == 0:
            return None
        return trip_price(
            TripQuery(
                mode=mode,
                distance=commute.business_trip_km,
                duration=duration,
                occupancy=commute.occupancy.get(mode, 1),
                traffic=states[mode],
            ),
            self.schedule,
        )

    def run_day(self, day: int) -> MetricsRow:
        modes = self.mode_ids
        n = len(self.profiles)
        legs = self.config.commute.legs_per_day
        self.earn_cap.start_day(day)
        forced_before = (self.desk.forced_purchases, self.desk.forced_fiat)

        # (1) Tráfico del día a partir de la demanda de ayer.
        states = {mode: traffic_state(self.network, mode, float(self.prev_demand[j])) for j, mode in enumerate(modes)}
        c = np.array([float(states[mode].congestion_multiplier) for mode in modes])
        time_factor = np.array([self.network.modes[mode].travel_time_factor for mode in modes])
        open_modes = np.array([self.network.modes[mode].available for mode in modes], dtype=bool)

        trips = np.zeros(len(modes), dtype=np.int64)
        km = np.zeros(len(modes))
        wfh = np.zeros(n, dtype=bool)
        chosen = np.full(n, -1)
        if n > 0:
            # (2a) Precios y utilidades de toda la población.
            available = self.available & open_modes
            duration = self.duration_base * time_factor
            prices = price_matrix(self.schedule, modes, self.distance, duration, c, self.occupancy)
            utilities = utility_matrix(
                self.asc, self.beta_time, self.beta_cost, duration * c, prices, float(self.price), available
            )
            scaled = utilities * self.mu[:, None]
            can_travel = available.any(axis=1)
            uniforms = self.streams.agent_uniforms(day, n)

            eligible = self.wfh_eligible & can_travel
            if eligible.any():
                commute_value = logsum(scaled[eligible], 1.0)
                pair = np.column_stack([self.wfh_asc * self.mu[eligible], commute_value])
                wfh[eligible] = sample_choices(choice_probabilities(pair, 1.0), uniforms[eligible, U_WFH]) == 0
            commuting = can_travel & ~wfh
            if commuting.any():
                chosen[commuting] = sample_choices(
                    choice_probabilities(scaled[commuting], 1.0), uniforms[commuting, U_MODE]
                )

            business_price = self._business_price(states)
            business = np.zeros(n, dtype=bool)
            if business_price is not None:
                business = self.employed & (uniforms[:, U_BUSINESS] < self.config.commute.business_trip_rate)
            business_j = modes.index(self.config.commute.business_trip_mode) if business.any() else None

            # (2b) Liquidación en orden de cuenta.
            self._settle_travel(day, wfh, chosen, prices, business, business_price)

            commuters = np.flatnonzero(chosen >= 0)
            picks = chosen[commuters]
            trips += np.bincount(picks, minlength=len(modes)) * legs
            km += np.bincount(picks, weights=self.distance[commuters, picks], minlength=len(modes)) * legs
            self.usage[commuters, picks] += legs
            if business_j is not None:
                riders = np.flatnonzero(business)
                trips[business_j] += riders.size
                km[business_j] += float(self.config.commute.business_trip_km) * riders.size
                self.usage[riders, business_j] += 1

        # (3) Repartos.
        self._run_deliveries(day)

        # (4) Mercado.
        volume = 0
        if (day + 1) % self.rules.session_every == 0:
            volume = self._run_session(day)

        # (5) Métricas y conservación.
        self.prev_demand = trips.astype(float)
        self.year_trips += trips
        balances = self.ledger.balances()
        if not conservation_check(balances):
            self.conservation_ok = False
            raise LedgerError(f"conservation broken at the end of day {day}")
        person_balances = [balances[account] for account in self.accounts]
        row = MetricsRow(
            day=day,
            year=day // self.period,
            modal_split=modal_split(trips, modes),
            clearing_price=self.price,
            market_volume=volume,
            supply_in_circulation=-balances[AGENCY],
            emissions_g=emissions(km, self.emission_factors),
            gini=gini(person_balances),
            forced_purchases=self.desk.forced_purchases - forced_before[0],
            forced_fiat=self.desk.forced_fiat - forced_before[1],
            earn_capped=self.earn_cap.saturated,
            wfh_days=int(wfh.sum()),
            trips=int(trips.sum()),
        )
        self.metrics_rows.append(row.to_record())
        return row

    def _settle_travel(self, day: int, wfh, chosen, prices, business, business_price: Optional[int]):
        """
        Liquida teletrabajo, trayectos y viajes de empresa del día en orden de
        cuenta. Los tramos de agentes que pueden pagar se confirman en bloque;
        el primer agente que no llega a cubrir un cargo (o cuyo empleador no
        llega) pasa por la mesa de liquidación y el bloque sigue detrás de él.
        """
        n = len(self.accounts)
        rows = np.flatnonzero(chosen >= 0)
        fare = np.zeros(n, dtype=np.int64)
        fare[rows] = prices[rows, chosen[rows]] * self.config.commute.legs_per_day
        business_fare = np.zeros(n, dtype=np.int64)
        if business_price is not None:
            business_fare[business] = business_price
        allowance = np.where(wfh, self.wfh_allowance, 0)
        reimbursed = np.where(self.job_ticket & (fare > 0), fare, 0)
        charged = np.where(~self.job_ticket & (fare > 0), fare, 0)
        employer_demand = allowance + reimbursed + np.maximum(business_fare, 0)

        balances = np.array(self.ledger.balances_for(self.accounts), dtype=np.int64)
        short = iter(np.flatnonzero(charged > balances).tolist())
        next_short = next(short, n)
        employer_next = [self._employer_short(k, 0, employer_demand) for k in range(len(self.employers))]

        start = 0
        while start < n:
            while next_short < start:
                next_short = next(short, n)
            stop = min([next_short] + employer_next)
            if stop > start:
                self._commit_travel_run(day, start, stop, chosen, fare, allowance, business_fare, employer_demand)
            if stop >= n:
                break
            self._settle_agent(day, stop, wfh, chosen, fare, business, business_price)
            k = int(self.employer_pos[stop])
            if k >= 0:
                employer_next[k] = self._employer_short(k, stop + 1, employer_demand)
            start = stop + 1

    def _employer_short(self, k: int, start: int, demand: np.ndarray) -> int:
        """Primer agente, desde `start`, cuyo pago deja al empleador k sin saldo suficiente (o n)."""
        members = self.members[k]
        members = members[np.searchsorted(members, start):]
        if members.size == 0:
            return len(self.accounts)
        over = np.flatnonzero(np.cumsum(demand[members]) > self.ledger.balance(self.employers[k]))
        return int(members[over[0]]) if over.size else len(self.accounts)

    def _commit_travel_run(self, day, start, stop, chosen, fare, allowance, business_fare, employer_demand):
        span = slice(start, stop)
        earners = start + np.flatnonzero(fare[span] < 0)
        earned = dict(zip(earners.tolist(), self.earn_cap.credit_many(earners, -fare[earners]).tolist()))
        riders = start + np.flatnonzero(business_fare[span] < 0)
        business_earned = dict(zip(riders.tolist(), self.earn_cap.credit_many(riders, -business_fare[riders]).tolist()))

        commute_memo = [f"commute:{day}:{mode}" for mode in self.mode_ids]
        wfh_memo, business_memo = f"wfh:{day}", f"business:{day}"
        accounts, employer_of = self.accounts, self.employer_of
        legs = []
        for i, pick, price, extra, trip, ticket in zip(
            range(start, stop),
            chosen[span].tolist(),
            fare[span].tolist(),
            allowance[span].tolist(),
            business_fare[span].tolist(),
            self.job_ticket[span].tolist(),
        ):
            agent = accounts[i]
            if extra:
                legs.append(Posting(EventKind.ALLOWANCE, employer_of[i], agent, extra, wfh_memo))
            if price > 0:
                if ticket:
                    legs.append(Posting(EventKind.REIMBURSEMENT, employer_of[i], agent, price, commute_memo[pick]))
                legs.append(Posting(EventKind.TRIP_CHARGE, agent, AGENCY, price, commute_memo[pick]))
            elif price < 0 and earned[i]:
                legs.append(Posting(EventKind.TRIP_EARN, AGENCY, agent, earned[i], commute_memo[pick]))
            if trip > 0:
                legs.append(Posting(EventKind.REIMBURSEMENT, employer_of[i], agent, trip, business_memo))
                legs.append(Posting(EventKind.TRIP_CHARGE, agent, AGENCY, trip, business_memo))
            elif trip < 0 and business_earned[i]:
                legs.append(Posting(EventKind.TRIP_EARN, AGENCY, agent, business_earned[i], business_memo))
        self.desk.commit_run(day, legs)

        payers = self.employer_pos[span] >= 0
        spent = np.zeros(len(self.employers), dtype=np.int64)
        np.add.at(spent, self.employer_pos[span][payers], employer_demand[span][payers])
        for k in np.flatnonzero(spent).tolist():
            self.outflow[self.employers[k]] += int(spent[k])

    def _settle_agent(self, day, i, wfh, chosen, fare, business, business_price):
        agent = self.accounts[i]
        contract = self.contracts[i]
        if wfh[i]:
            self._track(settle_commute(self.desk, day, agent, DayKind.WFH, contract, memo=f"wfh:{day}"))
        elif chosen[i] >= 0:
            memo = f"commute:{day}:{self.mode_ids[int(chosen[i])]}"
            self._track(settle_commute(self.desk, day, agent, DayKind.COMMUTE, contract, int(fare[i]), memo=memo))
        if business[i]:
            self._track(settle_business_trip(self.desk, day, agent, business_price, contract, memo=f"business:{day}"))

    def _run_deliveries(self, day: int):
        cfg = self.config.deliveries
        n = len(self.profiles)
        if cfg.rate_per_person_day == 0 or n == 0 or not self.merchants:
            return
        rng = self.streams.deliveries(day)
        count = int(rng.poisson(cfg.rate_per_person_day * n))
        for k in range(count):
            customer = self.accounts[int(rng.integers(n))]
            shop = self.merchants[int(rng.integers(len(self.merchants)))]
            values = [
                Decimal(f"{rng.uniform(float(lo), float(hi)):.2f}")
                for lo, hi in (cfg.distance, cfg.weight, cfg.volume)
            ]
            q = DeliveryQuery(
                distance=values[0], weight=values[1], volume=values[2],
                customer=customer, merchant=merchant(shop.id),
            )
            self._track(settle_delivery(self.desk, day, q, shop.delivery_model, cfg.coefficients, memo=f"delivery:{day}:{k}"))

    def _person_limit(self, u: float, buying: bool) -> Decimal:
        spread = self.config.trading.limit_spread
        factor = 1 + spread * (1.5 * u - (0.5 if buying else 1.0))
        limit = (self.price * Decimal(f"{factor:.6f}")).quantize(_LIMIT_QUANTUM, rounding=ROUND_HALF_UP)
        return max(limit, _LIMIT_QUANTUM)

    def _run_session(self, day: int) -> int:
        book = OrderBook(day)

        # Reposición de empleadores y comercios según lo que gastaron desde la última sesión.
        for account in self.employers + [merchant(m.id) for m in self.merchants]:
            order = employer_replenishment(
                account, self.ledger.balance(account), self.outflow.get(account, 0),
                self.rules, book.next_order_id(), day,
            )
            if order is not None:
                submit_order(order, self.rules, book, self.ledger, self.reserve)
        self.outflow.clear()

        agency_sell = min(self.rules.agency_sell_per_session, self.reserve.available)
        agency_sell -= agency_sell % self.rules.lot_cents
        if agency_sell > 0:
            order = Order(id=book.next_order_id(), account=AGENCY, side=Side.SELL,
                          quantity=agency_sell, limit=self.rules.price_cap, day=day)
            submit_order(order, self.rules, book, self.ledger, self.reserve)

        trading = self.config.trading
        if self.accounts:
            uniforms = self.streams.agent_uniforms(day, len(self.accounts))[:, U_TRADE]
            for i, account in enumerate(self.accounts):
                balance = self.ledger.balance(account)
                if balance < trading.buy_below:
                    side, quantity = Side.BUY, trading.buy_up_to - balance
                elif trading.sell_above is not None and balance > trading.sell_above:
                    side, quantity = Side.SELL, balance - trading.sell_above
                else:
                    continue
                if quantity <= 0:
                    continue
                order = Order(
                    id=book.next_order_id(), account=account, side=side, quantity=quantity,
                    limit=self._person_limit(float(uniforms[i]), side == Side.BUY), day=day,
                )
                submit_order(order, self.rules, book, self.ledger, self.reserve)

        book.close()
        result = clear_session(book, self.rules, self.price)
        if result.volume > 0:
            agency_fill = sum(f.quantity for f in result.fills if f.account == AGENCY and f.side == Side.SELL)
            if agency_fill:
                self.reserve.draw(agency_fill)
            self.desk.commit(day, settlement_postings(result, book), result.fiat_transfers)
        self.price = result.clearing_price
        self.desk.price = self.price
        logging.info(
            f"Market session day {day}: {result.n_orders} orders, price {result.clearing_price}, "
            f"volume {result.volume} cents, fees {result.fees_collected} cents"
        )
        self.market_rows.append({
            "day": day,
            "clearing_price": float(result.clearing_price),
            "volume_cents": result.volume,
            "fees_cents": result.fees_collected,
            "n_orders": result.n_orders,
        })
        return result.volume

    # --- Año ---

    def allocate(self, day: int, year_total: Optional[int] = None):
        postings = agency.allocate(self.profiles, self.config.allocation, year_total)
        self.desk.commit(day, postings)
        self.allocation_total = sum(p.amount for p in postings)

    def _eligible_bundles(self):
        budget = self.config.voting.budget
        costs = {m.id: m.cost for m in self.catalog}
        return [
            b for b in self.config.voting.bundles
            if all(m in costs for m in b.measures) and sum(costs[m] for m in b.measures) <= budget
        ]

    def _vote(self, year: int) -> list[int]:
        cfg = self.config.voting
        if not self.catalog:
            return []
        weights = voting.voting_weights(self.ledger.balances(), cfg.weight_rule)
        bundles = self._eligible_bundles() if cfg.mode == "bundle" else []
        ballots = voting.build_ballots(weights, self.usage, self.mode_ids, self.catalog, bundles, cfg.mode)
        if cfg.mode == "split":
            tally = voting.tally_split(ballots, self.catalog, cfg.budget)
            selected = tally.selected
            scores = {m: float(s) for m, s in tally.scores.items()}
        else:
            tally = voting.tally_bundle(ballots, bundles)
            winner = next((b for b in bundles if b.id == tally.winner), None)
            selected = sorted(winner.measures) if winner else []
            scores = {
                m.id: float(sum(tally.totals[b.id] for b in bundles if m.id in b.measures))
                for m in self.catalog
            }
        for measure in sorted(self.catalog, key=lambda m: m.id):
            self.voting_rows.append({
                "year": year,
                "measure_id": measure.id,
                "score": scores.get(measure.id, 0.0),
                "selected": measure.id in selected,
            })
        if selected:
            chosen = [m for m in self.catalog if m.id in selected]
            self.network = voting.apply_measures(self.network, chosen)
            self.implemented.update(selected)
            self.catalog = [m for m in self.catalog if m.id not in self.implemented]
        logging.info(f"Year {year} vote ({cfg.mode}): selected measures {selected}")
        return selected

    def year_end(self, day: int, last: bool = False):
        year = day // self.period
        selected = self._vote(year)
        if self.config.allocation.expire_at_year_end:
            self._track(self.desk.commit(day, agency.year_end_expiry(self.ledger.balances())))
        observed = modal_split(self.year_trips, self.mode_ids)
        next_total = agency.adjust_supply(observed, self.config.controller, self.allocation_total)
        self.years.append({
            "year": year,
            "allocation_total_cents": self.allocation_total,
            "modal_split": observed,
            "selected_measures": selected,
            "next_allocation_total_cents": next_total,
        })
        self.usage[:] = 0
        self.year_trips[:] = 0
        if not last:
            self.allocate(day, next_total)

    def run(self):
        logging.info(
            f"Starting simulation '{self.config.name}': {len(self.profiles)} persons, "
            f"{self.config.horizon_years} years, seed {self.seed}"
        )
        if self.n_days > 0:
            self.allocate(0)
        for day in range(self.n_days):
            self.run_day(day)
            if (day + 1) % self.period == 0:
                self.year_end(day, last=day + 1 == self.n_days)
        logging.info(f"Simulation '{self.config.name}' finished: {self.ledger.next_seq} events")

    # --- Resumen ---

    def summary(self, status: str = "completed", error: Optional[str] = None) -> dict:
        balances = self.ledger.balances()
        non_negative = all(v >= 0 for account, v in balances.items() if account != AGENCY)
        final_year = self.years[-1] if self.years else None
        last_year_sessions = [
            row["clearing_price"] for row in self.market_rows
            if final_year is not None and row["day"] // self.period == final_year["year"]
        ]
        summary = {
            "status": status,
            "scenario": self.config.name,
            "config_hash": config_hash(self.config),
            "seed": self.seed,
            "days": len(self.metrics_rows),
            "event_count": self.ledger.next_seq,
            "final_balances_sha256": balance_digest(balances),
            "supply_in_circulation_cents": -balances[AGENCY],
            "agency_reserve_cents": self.reserve.available,
            "reference_prices": {mode: format_cents(p) for mode, p in reference_prices(self.config).items()},
            "kpis": {
                "final_year_modal_split": final_year["modal_split"] if final_year else {},
                "final_year_mean_clearing_price": (
                    float(np.mean(last_year_sessions)) if last_year_sessions else float(self.price)
                ),
                "final_clearing_price": float(self.price),
                "forced_purchases": self.desk.forced_purchases,
                "forced_fiat_cents": str(self.desk.forced_fiat),
                "final_gini": self.metrics_rows[-1]["gini"] if self.metrics_rows else 0.0,
                "implemented_measures": sorted(self.implemented),
            },
            "fiat_by_kind": {kind: str(amount) for kind, amount in sorted(self.fiat.by_kind.items())},
            "integrity": {
                "conservation": self.conservation_ok and conservation_check(balances),
                "non_negative_balances": non_negative,
            },
            "years": self.years,
        }
        if error is not None:
            summary["error"] = error
        return summary

    def flush(self, out_dir: Path, status: str = "completed", error: Optional[str] = None) -> dict:
        write_metrics(out_dir, self.metrics_rows, MetricsRow.columns(self.mode_ids))
        write_market(out_dir, self.market_rows)
        write_voting(out_dir, self.voting_rows)
        summary = self.summary(status, error)
        write_summary(out_dir, summary)
        return summary


def run(config: ScenarioConfig, out_dir: Union[str, Path], seed: Optional[int] = None) -> dict:
    """
    Ejecuta un escenario completo y escribe sus artefactos en `out_dir`.
    Si la corrida falla se vuelcan los resultados parciales con status 'failed'
    y se relanza la excepción.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = EventLogWriter(out_dir / EVENTS_FILE)
    sim = None
    try:
        sim = Simulation(config, seed=seed, sink=writer)
        sim.run()
    except Exception as e:
        logging.error(f"Simulation failed: {e}", exc_info=True)
        writer.close()
        if sim is not None:
            sim.flush(out_dir, status="failed", error=str(e))
        else:
            write_summary(out_dir, {"status": "failed", "error": str(e), "config_hash": config_hash(config)})
        raise
    finally:
        writer.close()
    return sim.flush(out_dir)
