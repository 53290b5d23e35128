"""Day-stepped simulation of requests and donations over the bank network.

Each simulated day: expired stock is purged, then a drawn number of events is
processed. An event is either a blood request (fulfilled or denied by the
active allocation policy) or a donation (which opens a new inventory batch).
Every event becomes a TransactionRecord in the store and the report.

Two independent RNG streams derive from the scenario seed: one for the event
stream (daily counts, event kinds, users, components) and one for
policy-internal choices (bank shuffles under the random policy). Policies
sharing a seed therefore face the identical event stream, which is what makes
paired-seed comparisons meaningful.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

from .domain import (
    BloodType,
    CANONICAL_TYPE_ORDER,
    Component,
    compatible_donors,
    rarity_score,
    shelf_life_days,
)
from .store import BloodStore
from .synthgen import BloodBank, Dataset, InventoryBatch, TransactionRecord, User, euclidean

POLICY_RANDOM = "random"
POLICY_PROXIMITY_EXPIRY = "heuristic_proximity_expiry"
POLICY_RARITY = "heuristic_rarity"
POLICIES = (POLICY_RANDOM, POLICY_PROXIMITY_EXPIRY, POLICY_RARITY)

_COMPONENTS = tuple(Component)

# Among equal rarity scores, spend the more prevalent type first.
_RARITY_SPEND_ORDER = {
    t: (-rarity_score(t), i) for i, t in enumerate(CANONICAL_TYPE_ORDER)
}


@dataclass
class ScenarioConfig:
    start_date: date = date(2023, 1, 1)
    n_days: int = 30
    daily_events: tuple[int, int] = (40, 50)
    request_probability: float = 0.5
    proximity_fraction: float = 0.15
    policy: str = POLICY_PROXIMITY_EXPIRY
    request_quantity: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.n_days < 1:
            raise ValueError("n_days must be >= 1")
        lo, hi = self.daily_events
        if not (0 < lo <= hi):
            raise ValueError("daily_events range must satisfy 0 < lo <= hi")
        if not 0.0 < self.request_probability < 1.0:
            raise ValueError("request_probability must lie in (0, 1)")
        if not 0.0 < self.proximity_fraction <= 1.0:
            raise ValueError("proximity_fraction must lie in (0, 1]")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; choose from {POLICIES}")
        if self.request_quantity < 1:
            raise ValueError("request_quantity must be >= 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["start_date"] = self.start_date.isoformat()
        d["daily_events"] = list(self.daily_events)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        kwargs = dict(d)
        kwargs["start_date"] = date.fromisoformat(kwargs["start_date"])
        kwargs["daily_events"] = tuple(kwargs["daily_events"])
        return cls(**kwargs)


@dataclass
class Request:
    user: User
    blood_type: BloodType
    component: Component
    quantity: int = 1


@dataclass
class AllocationDecision:
    accepted: bool
    bank_id: int
    served_blood_type: BloodType | None
    draws: list[tuple[str, int]]
    distance: float
    transaction: TransactionRecord


@dataclass
class SimReport:
    policy: str
    seed: int
    start_date: date
    n_days: int
    accepted: int
    denied: int
    acceptance_ratio: float
    total_distance: float
    expired_units: int
    donated_units: int
    dispensed_units: int
    per_bank_daily: dict[int, list[float]]
    transactions: list[TransactionRecord]

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "seed": self.seed,
            "start_date": self.start_date.isoformat(),
            "n_days": self.n_days,
            "accepted": self.accepted,
            "denied": self.denied,
            "acceptance_ratio": self.acceptance_ratio,
            "total_distance": self.total_distance,
            "expired_units": self.expired_units,
            "donated_units": self.donated_units,
            "dispensed_units": self.dispensed_units,
            "per_bank_daily": {str(k): v for k, v in sorted(self.per_bank_daily.items())},
            "transactions": [t.to_dict() for t in self.transactions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        return cls(
            policy=d["policy"],
            seed=int(d["seed"]),
            start_date=date.fromisoformat(d["start_date"]),
            n_days=int(d["n_days"]),
            accepted=int(d["accepted"]),
            denied=int(d["denied"]),
            acceptance_ratio=float(d["acceptance_ratio"]),
            total_distance=float(d["total_distance"]),
            expired_units=int(d["expired_units"]),
            donated_units=int(d["donated_units"]),
            dispensed_units=int(d["dispensed_units"]),
            per_bank_daily={int(k): list(map(float, v)) for k, v in d["per_bank_daily"].items()},
            transactions=[TransactionRecord.from_dict(t) for t in d["transactions"]],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "SimReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def save_acceptance_series(self, path: str | Path) -> None:
        """Per-bank daily cumulative acceptance ratios as bank_id,day,ratio rows."""
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("bank_id,day,ratio\n")
            for bank_id in sorted(self.per_bank_daily):
                for day, ratio in enumerate(self.per_bank_daily[bank_id], start=1):
                    fh.write(f"{bank_id},{day},{ratio!r}\n")


def load_acceptance_series(path: str | Path) -> dict[int, list[float]]:
    series: dict[int, list[float]] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "bank_id,day,ratio":
            raise ValueError(f"unexpected acceptance series header: {header!r}")
        for line in fh:
            if not line.strip():
                continue
            bank_id, day, ratio = line.strip().split(",")
            series.setdefault(int(bank_id), []).append(float(ratio))
    return series


def purge_expired(store: BloodStore, as_of: date) -> int:
    """Zero out every batch past its expiration date; returns units removed.

    A unit is usable on its expiration date and removed the day after, so only
    batches with expiration_date < as_of are purged. Call with non-decreasing
    dates.
    """
    removed = 0
    for batch in store.take_expired_batches(as_of):
        removed += batch.quantity
        store.apply_inventory_delta(batch.batch_id, -batch.quantity)
    return removed


def candidate_banks(
    user_coord: tuple[float, float], banks: list[BloodBank], fraction: float
) -> list[int]:
    """The nearest ceil(fraction * n) banks, distance-ascending (ties by id)."""
    if not banks:
        raise ValueError("banks must be non-empty")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    take = math.ceil(fraction * len(banks))
    ranked = sorted(banks, key=lambda b: (euclidean(user_coord, b.coord), b.bank_id))
    return [b.bank_id for b in ranked[:take]]


def _nearest_bank(user_coord: tuple[float, float], banks: list[BloodBank]) -> BloodBank:
    return min(banks, key=lambda b: (euclidean(user_coord, b.coord), b.bank_id))


def _exact_draws(
    store: BloodStore, bank_id: int, request: Request, as_of: date
) -> list[tuple[InventoryBatch, int]] | None:
    """Expiry-ascending draws of the exact requested type, or None if short."""
    draws = []
    remaining = request.quantity
    for batch in store.live_batches(bank_id, request.component, as_of):
        if batch.blood_type is not request.blood_type:
            continue
        take = min(batch.quantity, remaining)
        draws.append((batch, take))
        remaining -= take
        if remaining == 0:
            return draws
    return None


def _compatible_draws(
    store: BloodStore, bank_id: int, request: Request, as_of: date, by_rarity: bool
) -> list[tuple[InventoryBatch, int]] | None:
    """Draws over all donor types compatible with the request, or None if short.

    Plain mode takes batches strictly expiry-ascending regardless of type.
    Rarity mode conserves scarce, flexible stock: it spends the requested type
    itself first, then substitute types in descending rarity-score order (most
    common first), expiry-ascending within each type, falling through to the
    next type while units are still needed.
    """
    donors = compatible_donors(request.blood_type)
    usable = [b for b in store.live_batches(bank_id, request.component, as_of)
              if b.blood_type in donors]
    if by_rarity:
        usable.sort(key=lambda b: (b.blood_type is not request.blood_type,
                                   _RARITY_SPEND_ORDER[b.blood_type],
                                   b.expiration_date, b.batch_id))
    draws = []
    remaining = request.quantity
    for batch in usable:
        take = min(batch.quantity, remaining)
        draws.append((batch, take))
        remaining -= take
        if remaining == 0:
            return draws
    return None


def _holds_exact(store: BloodStore, bank_id: int, request: Request, as_of: date) -> bool:
    total = 0
    for batch in store.live_batches(bank_id, request.component, as_of):
        if batch.blood_type is request.blood_type:
            total += batch.quantity
            if total >= request.quantity:
                return True
    return False


def select_allocation(
    policy: str,
    request: Request,
    store: BloodStore,
    as_of: date,
    rng: random.Random,
    *,
    proximity_fraction: float = 0.15,
    tx_id: str | None = None,
) -> AllocationDecision:
    """Run one request through a policy, committing stock draws and the record.

    random: banks are scanned in a uniformly shuffled order and the first one
    holding enough unexpired stock of the exact requested type and component
    fulfills, drawing batches expiry-ascending.

    heuristic_proximity_expiry: only the nearest `proximity_fraction` of banks
    are considered, in proximity order; the first holding enough compatible
    stock of the component fulfills, drawing compatible batches strictly
    expiry-ascending regardless of type.

    heuristic_rarity: same bank choice, but the winning bank spends common
    types before rare ones (descending rarity score), expiry-ascending within
    a type.

    Denial is a value: the decision carries accepted=False and a denied
    TransactionRecord attributed to the user's nearest bank, with distance 0.
    """
    banks = store.banks()
    if not banks:
        raise ValueError("store holds no banks")
    if tx_id is None:
        tx_id = f"st-{store.count('blood_transactions') + 1:06d}"

    chosen_bank: BloodBank | None = None
    draws: list[tuple[InventoryBatch, int]] | None = None
    if policy == POLICY_RANDOM:
        order = list(banks)
        rng.shuffle(order)
        for bank in order:
            draws = _exact_draws(store, bank.bank_id, request, as_of)
            if draws is not None:
                chosen_bank = bank
                break
    elif policy in (POLICY_PROXIMITY_EXPIRY, POLICY_RARITY):
        by_id = {b.bank_id: b for b in banks}
        for bank_id in candidate_banks(request.user.coord, banks, proximity_fraction):
            draws = _compatible_draws(
                store, bank_id, request, as_of, by_rarity=(policy == POLICY_RARITY)
            )
            if draws is not None:
                chosen_bank = by_id[bank_id]
                break
    else:
        raise ValueError(f"unknown policy {policy!r}")

    if chosen_bank is None or draws is None:
        tx = TransactionRecord(
            tx_id=tx_id,
            kind="request",
            user_id=request.user.user_id,
            bank_id=_nearest_bank(request.user.coord, banks).bank_id,
            blood_type=request.blood_type,
            component=request.component,
            quantity=request.quantity,
            date=as_of,
            outcome="denied",
            distance=0.0,
            batch_ids=[],
        )
        store.insert_record("blood_transactions", tx)
        return AllocationDecision(
            accepted=False, bank_id=tx.bank_id, served_blood_type=None,
            draws=[], distance=0.0, transaction=tx,
        )

    for batch, take in draws:
        store.apply_inventory_delta(batch.batch_id, -take)
    distance = euclidean(request.user.coord, chosen_bank.coord)
    tx = TransactionRecord(
        tx_id=tx_id,
        kind="request",
        user_id=request.user.user_id,
        bank_id=chosen_bank.bank_id,
        blood_type=request.blood_type,
        component=request.component,
        quantity=request.quantity,
        date=as_of,
        outcome="accepted",
        distance=distance,
        batch_ids=[batch.batch_id for batch, _ in draws],
    )
    store.insert_record("blood_transactions", tx)
    return AllocationDecision(
        accepted=True,
        bank_id=chosen_bank.bank_id,
        served_blood_type=draws[0][0].blood_type,
        draws=[(batch.batch_id, take) for batch, take in draws],
        distance=distance,
        transaction=tx,
    )


def select_donation_bank(
    policy: str,
    user_coord: tuple[float, float],
    banks: list[BloodBank],
    rng: random.Random,
) -> int:
    """Bank receiving a donation: uniform under random, nearest otherwise."""
    if not banks:
        raise ValueError("banks must be non-empty")
    if policy == POLICY_RANDOM:
        return rng.choice(banks).bank_id
    if policy in (POLICY_PROXIMITY_EXPIRY, POLICY_RARITY):
        return _nearest_bank(user_coord, banks).bank_id
    raise ValueError(f"unknown policy {policy!r}")


def run_simulation(
    cfg: ScenarioConfig, dataset: Dataset, store: BloodStore | None = None
) -> SimReport:
    """Execute a full scenario and return its report.

    The store (defaulting to a fresh in-memory one) is loaded with the dataset
    and receives every simulated transaction; identical (cfg, dataset) pairs
    produce identical reports.
    """
    cfg.validate()
    if store is None:
        store = BloodStore()
    store.insert_dataset(dataset)

    banks = store.banks()
    patients = [u for u in dataset.users if u.can_request]
    donors = [u for u in dataset.users if u.can_donate]
    if not patients or not donors:
        raise ValueError("dataset must contain at least one patient and one donor")

    events_rng = random.Random(f"{cfg.seed}:events")
    policy_rng = random.Random(f"{cfg.seed}:policy")

    accepted = denied = 0
    expired_units = donated_units = dispensed_units = 0
    total_distance = 0.0
    new_transactions: list[TransactionRecord] = []
    # bank_id -> [cumulative accepted, cumulative requests]
    bank_counts = {b.bank_id: [0, 0] for b in banks}
    per_bank_daily: dict[int, list[float]] = {b.bank_id: [] for b in banks}
    tx_seq = batch_seq = 0

    for day in range(cfg.n_days):
        current = cfg.start_date + timedelta(days=day)
        store.set_current_date(current)
        expired_units += purge_expired(store, current)

        for _ in range(events_rng.randint(*cfg.daily_events)):
            is_request = events_rng.random() < cfg.request_probability
            if is_request:
                user = events_rng.choice(patients)
                component = events_rng.choice(_COMPONENTS)
                tx_seq += 1
                decision = select_allocation(
                    cfg.policy,
                    Request(user=user, blood_type=user.blood_type,
                            component=component, quantity=cfg.request_quantity),
                    store,
                    current,
                    policy_rng,
                    proximity_fraction=cfg.proximity_fraction,
                    tx_id=f"st-{tx_seq:06d}",
                )
                counts = bank_counts[decision.bank_id]
                counts[1] += 1
                if decision.accepted:
                    counts[0] += 1
                    accepted += 1
                    dispensed_units += cfg.request_quantity
                    total_distance += decision.distance
                else:
                    denied += 1
                new_transactions.append(decision.transaction)
            else:
                user = events_rng.choice(donors)
                component = events_rng.choice(_COMPONENTS)
                bank_id = select_donation_bank(cfg.policy, user.coord, banks, policy_rng)
                bank = store.get("blood_banks", bank_id)
                batch_seq += 1
                batch = InventoryBatch(
                    batch_id=f"sb-{batch_seq:06d}",
                    bank_id=bank_id,
                    blood_type=user.blood_type,
                    component=component,
                    quantity=1,
                    expiration_date=current + timedelta(days=shelf_life_days(component)),
                )
                store.insert_record("blood_inventory", batch)
                distance = euclidean(user.coord, bank.coord)
                total_distance += distance
                donated_units += 1
                tx_seq += 1
                tx = TransactionRecord(
                    tx_id=f"st-{tx_seq:06d}",
                    kind="donation",
                    user_id=user.user_id,
                    bank_id=bank_id,
                    blood_type=user.blood_type,
                    component=component,
                    quantity=1,
                    date=current,
                    outcome="accepted",
                    distance=distance,
                    batch_ids=[batch.batch_id],
                )
                store.insert_record("blood_transactions", tx)
                new_transactions.append(tx)

        for bank_id, (acc, req) in bank_counts.items():
            series = per_bank_daily[bank_id]
            if req > 0:
                series.append(acc / req)
            else:
                series.append(series[-1] if series else 1.0)

    total_requests = accepted + denied
    return SimReport(
        policy=cfg.policy,
        seed=cfg.seed,
        start_date=cfg.start_date,
        n_days=cfg.n_days,
        accepted=accepted,
        denied=denied,
        acceptance_ratio=accepted / total_requests if total_requests else 0.0,
        total_distance=total_distance,
        expired_units=expired_units,
        donated_units=donated_units,
        dispensed_units=dispensed_units,
        per_bank_daily=per_bank_daily,
        transactions=new_transactions,
    )
