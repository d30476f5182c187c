# app/services/agency.py
#
# La Agencia de MobilityCoins: asignación anual a las personas, ajuste de la
# oferta total hacia el reparto modal objetivo y caducidad de fin de año.
#
# Controlador proporcional:
#   siguiente = anterior · (1 - k·(s_obs[modo] - s*[modo]))
#   acotado a anterior · (1 ± max_rel_change)

import logging
from decimal import Decimal, ROUND_HALF_UP
from typing import Iterable, Mapping, Optional

from app.models.agency import AllocationPolicy, SupplyController
from app.models.choice import AgentProfile
from app.models.ledger import AGENCY, AccountId, AccountKind, EventKind, Posting


def entitlement(profile: AgentProfile, policy: AllocationPolicy) -> int:
    """Derecho individual: base más el bono si la persona tiene pocos modos disponibles."""
    amount = policy.base_per_person
    if len(profile.available_modes) < policy.low_access_threshold:
        amount += policy.low_access_bonus
    return amount


def rescale(entitlements: Mapping[AccountId, int], total: int) -> dict[AccountId, int]:
    """
    Reescala los derechos para que sumen exactamente `total` céntimos
    (mayor resto; los empates se resuelven en orden de cuenta).
    """
    accounts = sorted(entitlements)
    weight = sum(entitlements.values())
    if weight == 0 or total <= 0:
        return {account: 0 for account in accounts}
    shares = {}
    remainders = []
    for account in accounts:
        base, rem = divmod(total * entitlements[account], weight)
        shares[account] = base
        remainders.append((-rem, account))
    leftover = total - sum(shares.values())
    for _, account in sorted(remainders)[:leftover]:
        shares[account] += 1
    return shares


def allocate(population: Iterable[AgentProfile], policy: AllocationPolicy, year_total: Optional[int] = None) -> list[Posting]:
    """
    Eventos de asignación del año. Con `year_total` None (primer año) cada
    persona recibe su derecho íntegro.
    """
    entitlements = {profile.account: entitlement(profile, policy) for profile in population}
    if year_total is None:
        amounts = dict(sorted(entitlements.items()))
    else:
        amounts = rescale(entitlements, year_total)
    logging.info(f"Allocating {sum(amounts.values())} cents to {len(amounts)} persons")
    return [
        Posting(EventKind.ALLOCATION, AGENCY, account, amount, "allocation")
        for account, amount in amounts.items()
        if amount > 0
    ]


def adjust_supply(observed_split: Mapping[str, float], controller: SupplyController, prev_total: int) -> int:
    """Oferta total del año siguiente según el controlador proporcional, en céntimos."""
    mode = controller.controlled_mode
    observed = Decimal(str(observed_split.get(mode, 0)))
    target = controller.target_split.get(mode, Decimal(0))
    prev = Decimal(prev_total)
    proposed = prev * (1 - controller.gain * (observed - target))
    lower = prev * (1 - controller.max_rel_change)
    upper = prev * (1 + controller.max_rel_change)
    bounded = min(max(proposed, lower), upper)
    next_total = int(bounded.quantize(Decimal(1), rounding=ROUND_HALF_UP))
    logging.info(
        f"Supply adjustment: {mode} share observed {observed} vs target {target}; "
        f"total {prev_total} -> {next_total} cents"
    )
    return next_total


def year_end_expiry(balances: Mapping[AccountId, int]) -> list[Posting]:
    """Devuelve a la Agencia el saldo restante de cada persona (empleadores y comercios no caducan)."""
    return [
        Posting(EventKind.EXPIRY, account, AGENCY, amount, "expiry")
        for account, amount in sorted(balances.items())
        if account.kind == AccountKind.PERSON and amount > 0
    ]
