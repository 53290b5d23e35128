"""Deterministic synthetic dataset generator for the bank network.

Produces banks, users, initial inventory, and the seed donation transactions
that created it. The same `GenConfig` always yields a byte-identical dataset:
entity attributes come from fixed word lists driven by a single seeded RNG,
and ZIP codes map to plane coordinates through a keyed hash rather than any
process-dependent state.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import random
import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

from .domain import BloodType, Component, sample_blood_type, shelf_life_days

_ZIP_RE = re.compile(r"^[0-9]{5}$")

# Coordinates live on a [0, 1000] x [0, 1000] plane; distances are Euclidean
# and dimensionless ("units").
PLANE_SIZE = 1000.0

_FIRST_NAMES = (
    "Ada", "Amara", "Brandon", "Carmen", "Daniel", "Elena", "Farid", "Grace",
    "Hassan", "Imani", "Jonas", "Keisha", "Luis", "Mei", "Nadia", "Omar",
    "Priya", "Quentin", "Rosa", "Samuel", "Tara", "Umar", "Vera", "Wendell",
    "Ximena", "Yusuf", "Zoe",
)
_LAST_NAMES = (
    "Abara", "Bennett", "Castillo", "Diallo", "Eriksen", "Fujimoto", "Garza",
    "Haddad", "Ivanova", "Jensen", "Kamau", "Lindqvist", "Mbeki", "Navarro",
    "Okafor", "Petrov", "Quispe", "Rahman", "Santos", "Tanaka", "Umarov",
    "Vasquez", "Weber", "Yamada", "Zhang",
)
_PLACE_NAMES = (
    "Cedar", "Harbor", "Summit", "Lakeside", "Meridian", "Crescent", "Aurora",
    "Willow", "Granite", "Cypress", "Redwood", "Horizon", "Juniper", "Delta",
    "Beacon", "Caldera", "Monarch", "Sterling", "Pinnacle", "Vantage",
)
_BANK_SUFFIXES = ("Blood Center", "Regional Blood Bank", "Donor Center", "Blood Services")


def zip_to_coord(zip_code: str, seed: int = 0) -> tuple[float, float]:
    """Map a 5-digit ZIP code to a reproducible point on the plane.

    The point is uniform on [0, 1000]^2 over the ZIP space and depends only on
    (zip_code, seed), so every holder of the same ZIP shares a location.
    """
    if not isinstance(zip_code, str) or not _ZIP_RE.match(zip_code):
        raise ValueError(f"zip code must be 5 digits, got {zip_code!r}")
    digest = hashlib.sha256(f"{zip_code}|{seed}".encode("ascii")).digest()
    hx = int.from_bytes(digest[:8], "big")
    hy = int.from_bytes(digest[8:16], "big")
    scale = PLANE_SIZE / 2**64
    return (hx * scale, hy * scale)


def euclidean(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass
class BloodBank:
    bank_id: int
    name: str
    zip: str
    coord: tuple[float, float]
    contact: str

    def to_dict(self) -> dict:
        return {
            "bank_id": self.bank_id,
            "name": self.name,
            "zip": self.zip,
            "coord": [self.coord[0], self.coord[1]],
            "contact": self.contact,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BloodBank":
        return cls(
            bank_id=int(d["bank_id"]),
            name=d["name"],
            zip=d["zip"],
            coord=(float(d["coord"][0]), float(d["coord"][1])),
            contact=d["contact"],
        )


@dataclass
class User:
    user_id: int
    role: str  # donor | patient | both
    blood_type: BloodType
    zip: str
    coord: tuple[float, float]
    name: str
    phone: str
    email: str

    @property
    def can_donate(self) -> bool:
        return self.role in ("donor", "both")

    @property
    def can_request(self) -> bool:
        return self.role in ("patient", "both")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "role": self.role,
            "blood_type": self.blood_type.value,
            "zip": self.zip,
            "coord": [self.coord[0], self.coord[1]],
            "name": self.name,
            "phone": self.phone,
            "email": self.email,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "User":
        return cls(
            user_id=int(d["user_id"]),
            role=d["role"],
            blood_type=BloodType.parse(d["blood_type"]),
            zip=d["zip"],
            coord=(float(d["coord"][0]), float(d["coord"][1])),
            name=d["name"],
            phone=d["phone"],
            email=d["email"],
        )


@dataclass
class InventoryBatch:
    batch_id: str
    bank_id: int
    blood_type: BloodType
    component: Component
    quantity: int
    expiration_date: date

    def to_dict(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "bank_id": self.bank_id,
            "blood_type": self.blood_type.value,
            "component": self.component.value,
            "quantity": self.quantity,
            "expiration_date": self.expiration_date.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InventoryBatch":
        return cls(
            batch_id=d["batch_id"],
            bank_id=int(d["bank_id"]),
            blood_type=BloodType.parse(d["blood_type"]),
            component=Component.parse(d["component"]),
            quantity=int(d["quantity"]),
            expiration_date=date.fromisoformat(d["expiration_date"]),
        )


@dataclass
class TransactionRecord:
    tx_id: str
    kind: str  # donation | request
    user_id: int
    bank_id: int
    blood_type: BloodType
    component: Component
    quantity: int
    date: date
    outcome: str  # accepted | denied | n/a
    distance: float
    batch_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tx_id": self.tx_id,
            "kind": self.kind,
            "user_id": self.user_id,
            "bank_id": self.bank_id,
            "blood_type": self.blood_type.value,
            "component": self.component.value,
            "quantity": self.quantity,
            "date": self.date.isoformat(),
            "outcome": self.outcome,
            "distance": self.distance,
            "batch_ids": list(self.batch_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransactionRecord":
        return cls(
            tx_id=d["tx_id"],
            kind=d["kind"],
            user_id=int(d["user_id"]),
            bank_id=int(d["bank_id"]),
            blood_type=BloodType.parse(d["blood_type"]),
            component=Component.parse(d["component"]),
            quantity=int(d["quantity"]),
            date=date.fromisoformat(d["date"]),
            outcome=d["outcome"],
            distance=float(d["distance"]),
            batch_ids=list(d["batch_ids"]),
        )


@dataclass
class GenConfig:
    n_banks: int = 20
    n_users: int = 1000
    n_seed_transactions: int = 4200
    start_date: date = date(2023, 1, 1)
    seed: int = 42
    # Seed donations are dated uniformly over this many days before start_date
    # (how the initial stock is spread over time is a free parameter).
    pre_window_days: int = 60
    donor_fraction: float = 0.45
    patient_fraction: float = 0.45

    def validate(self) -> None:
        if self.n_banks <= 0:
            raise ValueError("n_banks must be positive")
        if self.n_users <= 0:
            raise ValueError("n_users must be positive")
        if self.n_seed_transactions <= 0:
            raise ValueError("n_seed_transactions must be positive")
        if self.pre_window_days <= 0:
            raise ValueError("pre_window_days must be positive")
        if not 0.0 < self.donor_fraction + self.patient_fraction <= 1.0:
            raise ValueError("role fractions must sum to at most 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["start_date"] = self.start_date.isoformat()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        kwargs = dict(d)
        if "start_date" in kwargs:
            kwargs["start_date"] = date.fromisoformat(kwargs["start_date"])
        return cls(**kwargs)


_TABLE_FILES = {
    "blood_banks": "banks.jsonl",
    "users": "users.jsonl",
    "blood_inventory": "inventory.jsonl",
    "blood_transactions": "transactions.jsonl",
}


@dataclass
class Dataset:
    banks: list[BloodBank]
    users: list[User]
    inventory: list[InventoryBatch]
    transactions: list[TransactionRecord]

    def save(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        groups = {
            "blood_banks": self.banks,
            "users": self.users,
            "blood_inventory": self.inventory,
            "blood_transactions": self.transactions,
        }
        for table, records in groups.items():
            path = out / _TABLE_FILES[table]
            with path.open("w", encoding="utf-8") as fh:
                for record in records:
                    fh.write(json.dumps(record.to_dict(), sort_keys=True))
                    fh.write("\n")

    @classmethod
    def load(cls, in_dir: str | Path) -> "Dataset":
        src = Path(in_dir)
        parsers = {
            "blood_banks": BloodBank.from_dict,
            "users": User.from_dict,
            "blood_inventory": InventoryBatch.from_dict,
            "blood_transactions": TransactionRecord.from_dict,
        }
        loaded: dict[str, list] = {}
        for table, parse in parsers.items():
            path = src / _TABLE_FILES[table]
            if not path.exists():
                raise FileNotFoundError(f"dataset file missing: {path}")
            with path.open("r", encoding="utf-8") as fh:
                loaded[table] = [parse(json.loads(line)) for line in fh if line.strip()]
        return cls(
            banks=loaded["blood_banks"],
            users=loaded["users"],
            inventory=loaded["blood_inventory"],
            transactions=loaded["blood_transactions"],
        )

    def content_hash(self) -> str:
        """SHA-256 over the canonical serialized form of all four tables."""
        h = hashlib.sha256()
        for records in (self.banks, self.users, self.inventory, self.transactions):
            for record in records:
                h.update(json.dumps(record.to_dict(), sort_keys=True).encode("utf-8"))
                h.update(b"\n")
        return h.hexdigest()


def _random_zip(rng: random.Random) -> str:
    return f"{rng.randrange(100000):05d}"


def _phone(rng: random.Random) -> str:
    return f"{rng.randrange(200, 990)}-{rng.randrange(200, 990)}-{rng.randrange(10000):04d}"


def generate_dataset(cfg: GenConfig) -> Dataset:
    """Build the full synthetic dataset for one seed.

    Every seed transaction is a one-unit donation that either opens a new
    inventory batch or tops up the batch already open for the same
    (bank, type, component, donation date); batch expiry follows the
    component's shelf life.
    """
    cfg.validate()
    rng = random.Random(cfg.seed)

    banks = []
    for bank_id in range(1, cfg.n_banks + 1):
        zip_code = _random_zip(rng)
        place = rng.choice(_PLACE_NAMES)
        suffix = rng.choice(_BANK_SUFFIXES)
        banks.append(
            BloodBank(
                bank_id=bank_id,
                name=f"{place} {suffix}",
                zip=zip_code,
                coord=zip_to_coord(zip_code, cfg.seed),
                contact=_phone(rng),
            )
        )

    users = []
    for user_id in range(1, cfg.n_users + 1):
        u = rng.random()
        if u < cfg.donor_fraction:
            role = "donor"
        elif u < cfg.donor_fraction + cfg.patient_fraction:
            role = "patient"
        else:
            role = "both"
        first = rng.choice(_FIRST_NAMES)
        last = rng.choice(_LAST_NAMES)
        zip_code = _random_zip(rng)
        users.append(
            User(
                user_id=user_id,
                role=role,
                blood_type=sample_blood_type(rng),
                zip=zip_code,
                coord=zip_to_coord(zip_code, cfg.seed),
                name=f"{first} {last}",
                phone=_phone(rng),
                email=f"{first.lower()}.{last.lower()}.{user_id}@example.org",
            )
        )

    donors = [u for u in users if u.can_donate]
    if not donors:
        raise ValueError("generated population contains no donors; adjust role fractions")

    inventory: list[InventoryBatch] = []
    transactions: list[TransactionRecord] = []
    open_batches: dict[tuple[int, BloodType, Component, date], InventoryBatch] = {}
    components = list(Component)
    for n in range(1, cfg.n_seed_transactions + 1):
        donor = rng.choice(donors)
        bank = rng.choice(banks)
        component = rng.choice(components)
        donated = cfg.start_date - timedelta(days=rng.randint(1, cfg.pre_window_days))
        key = (bank.bank_id, donor.blood_type, component, donated)
        batch = open_batches.get(key)
        if batch is None:
            batch = InventoryBatch(
                batch_id=f"b-{len(inventory) + 1:06d}",
                bank_id=bank.bank_id,
                blood_type=donor.blood_type,
                component=component,
                quantity=1,
                expiration_date=donated + timedelta(days=shelf_life_days(component)),
            )
            open_batches[key] = batch
            inventory.append(batch)
        else:
            batch.quantity += 1
        transactions.append(
            TransactionRecord(
                tx_id=f"t-{n:06d}",
                kind="donation",
                user_id=donor.user_id,
                bank_id=bank.bank_id,
                blood_type=donor.blood_type,
                component=component,
                quantity=1,
                date=donated,
                outcome="accepted",
                distance=euclidean(donor.coord, bank.coord),
                batch_ids=[batch.batch_id],
            )
        )

    return Dataset(banks=banks, users=users, inventory=inventory, transactions=transactions)
