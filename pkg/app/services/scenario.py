# app/services/scenario.py
#
# Carga y validación del fichero de escenario, y construcción de la población.
#
# La validación tiene tres fases con errores distintos:
#   1. esquema (Pydantic)            -> ConfigSchemaError
#   2. referencias a ids existentes  -> DanglingReferenceError
#   3. invariantes entre módulos     -> ConfigInvariantError

import hashlib
import json
import logging
import math
from decimal import Decimal
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from app.exceptions import ConfigInvariantError, ConfigSchemaError, DanglingReferenceError
from app.models.choice import AgentProfile
from app.models.flows import EmploymentContract
from app.models.ledger import employer, person
from app.models.pricing import FREE_FLOW, TripQuery
from app.models.scenario import ScenarioConfig
from app.services.pricing import trip_price
from app.services.rng import SeedStreams


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    """Lee y valida un fichero de escenario."""
    path = Path(path)
    logging.info(f"Loading scenario config from {path}")
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigSchemaError(str(path), f"cannot read file: {e}")
    return parse_config(raw)


def parse_config(raw: Union[str, bytes, dict]) -> ScenarioConfig:
    try:
        if isinstance(raw, dict):
            config = ScenarioConfig.model_validate(raw)
        else:
            config = ScenarioConfig.model_validate_json(raw)
    except ValidationError as e:
        first = e.errors()[0]
        field_path = ".".join(str(part) for part in first["loc"]) or "<root>"
        logging.error(f"Scenario schema violation at {field_path}: {first['msg']}")
        raise ConfigSchemaError(field_path, first["msg"])
    check_references(config)
    check_invariants(config)
    return config


def check_references(config: ScenarioConfig):
    """Todo id de modo, empleador o medida que se menciona debe existir."""
    modes = set(config.mode_ids)

    def require(where: str, mode: Optional[str]):
        if mode is not None and mode not in modes:
            raise DanglingReferenceError(where, mode)

    for mode in config.schedule.rates:
        require("schedule.rates", mode)
    for mode in config.network.modes:
        require("network.modes", mode)
    for mode in list(config.reference_od.distance) + list(config.reference_od.duration):
        require("reference_od", mode)
    for mode in config.controller.target_split:
        require("controller.target_split", mode)
    require("controller.controlled_mode", config.controller.controlled_mode)
    for mode in list(config.population.mode_availability) + list(config.population.asc):
        require("population", mode)
    for mode in config.commute.occupancy:
        require("commute.occupancy", mode)
    require("commute.business_trip_mode", config.commute.business_trip_mode)
    for measure in config.voting.measures:
        for effect in measure.effects:
            require(f"voting.measures[{measure.id}].effects", effect.mode)
    measure_ids = {m.id for m in config.voting.measures}
    for bundle in config.voting.bundles:
        for measure_id in bundle.measures:
            if measure_id not in measure_ids:
                raise DanglingReferenceError(f"voting.bundles[{bundle.id}]", measure_id)

    employer_ids = {e.id for e in config.employers}
    for profile in config.population.profiles or []:
        for mode in profile.available_modes:
            require(f"population.profiles[{profile.account}]", mode)
        if profile.employer is not None and profile.employer.index not in employer_ids:
            raise DanglingReferenceError(f"population.profiles[{profile.account}].employer", str(profile.employer))


def check_invariants(config: ScenarioConfig):
    def fail(message: str):
        logging.error(f"Scenario invariant violated: {message}")
        raise ConfigInvariantError(message)

    ids = config.mode_ids
    if len(set(ids)) != len(ids):
        fail("mode ids must be unique")
    for mode in ids:
        if mode not in config.schedule.rates:
            fail(f"mode '{mode}' has no price schedule entry")
        if mode not in config.network.modes:
            fail(f"mode '{mode}' has no network supply entry")
        if mode not in config.reference_od.distance or mode not in config.reference_od.duration:
            fail(f"mode '{mode}' has no reference OD entry")
    if config.e_max > 0 and not config.schedule.earning_modes():
        fail("e_max > 0 requires at least one earning mode")
    if not config.schedule.charged_modes():
        fail("at least one charged mode is required")
    for name, items in (
        ("employer", config.employers),
        ("merchant", config.merchants),
        ("measure", config.voting.measures),
        ("bundle", config.voting.bundles),
    ):
        item_ids = [item.id for item in items]
        if len(set(item_ids)) != len(item_ids):
            fail(f"{name} ids must be unique")
    if config.deliveries.rate_per_person_day > 0 and not config.merchants:
        fail("deliveries need at least one merchant")
    if config.commute.business_trip_rate > 0 and config.commute.business_trip_mode is None:
        fail("business trips need a business_trip_mode")
    if config.trading.sell_above is not None and config.trading.sell_above < config.trading.buy_up_to:
        fail("trading.sell_above must not be below trading.buy_up_to")
    if config.voting.mode == "bundle" and not config.voting.bundles and config.voting.measures:
        fail("bundle voting needs at least one bundle")
    profiles = config.population.profiles
    if profiles is not None:
        indices = [p.account.index for p in profiles]
        if indices != list(range(len(profiles))):
            fail("explicit profiles must be person:0..n-1 in order")
        if config.population.count not in (0, len(profiles)):
            fail("population.count disagrees with the number of explicit profiles")


def config_hash(config: ScenarioConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_population(config: ScenarioConfig, streams: SeedStreams) -> list[AgentProfile]:
    """
    Perfiles de la población: los explícitos del fichero o, si no hay, una
    población sintética generada con el subflujo 'population'.
    """
    cfg = config.population
    if cfg.profiles is not None:
        return list(cfg.profiles)

    rng = streams.generator("population")
    mode_ids = config.mode_ids
    ref = config.reference_od
    employer_ids = sorted(e.id for e in config.employers)
    profiles = []
    for i in range(cfg.count):
        # Consumo fijo del flujo por persona: factor, un u por modo, teletrabajo, empleo.
        factor = math.exp(rng.normal(0.0, cfg.distance_sigma)) if cfg.distance_sigma > 0 else 1.0
        draws = rng.random(len(mode_ids))
        wfh_u, employed_u = rng.random(2)
        factor = round(factor, 2) or 0.01

        available = [m for m, u in zip(mode_ids, draws) if u < cfg.mode_availability.get(m, 1.0)]
        if not available:
            available = [max(mode_ids, key=lambda m: (cfg.mode_availability.get(m, 1.0), -mode_ids.index(m)))]
        employer_account = None
        if employer_ids and employed_u < cfg.employed_share:
            employer_account = employer(employer_ids[i % len(employer_ids)])
        profiles.append(AgentProfile(
            account=person(i),
            available_modes=available,
            od_distance={m: (ref.distance[m] * Decimal(str(factor))).quantize(Decimal("0.01")) for m in available},
            od_duration_base={m: ref.duration[m] * factor for m in available},
            beta_time=cfg.beta_time,
            beta_cost=cfg.beta_cost,
            asc={m: cfg.asc[m] for m in available if m in cfg.asc},
            logit_scale=cfg.logit_scale,
            wfh_eligible=bool(wfh_u < cfg.wfh_share),
            employer=employer_account,
        ))
    logging.info(f"Built synthetic population of {len(profiles)} persons")
    return profiles


def build_contracts(config: ScenarioConfig, profiles: list[AgentProfile]) -> list[Optional[EmploymentContract]]:
    by_id = {e.id: e for e in config.employers}
    contracts = []
    for profile in profiles:
        if profile.employer is None:
            contracts.append(None)
            continue
        entry = by_id[profile.employer.index]
        contracts.append(EmploymentContract(
            employer=profile.employer,
            commute_policy=entry.commute_policy,
            allowance=entry.allowance,
        ))
    return contracts


def reference_prices(config: ScenarioConfig) -> dict[str, int]:
    """Precio en céntimos de cada modo en la OD de referencia, en flujo libre."""
    prices = {}
    for mode in config.mode_ids:
        distance = config.reference_od.distance[mode]
        duration = Decimal(str(config.reference_od.duration[mode]))
        if distance == 0 and duration == 0:
            continue
        prices[mode] = trip_price(
            TripQuery(
                mode=mode,
                distance=distance,
                duration=duration,
                occupancy=config.commute.occupancy.get(mode, 1),
                traffic=FREE_FLOW,
            ),
            config.schedule,
        )
    return prices
