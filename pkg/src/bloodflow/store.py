"""Partition-keyed persistence for the four-table schema.

Tables: blood_banks and users (partitioned by id), blood_inventory
(partitioned by bank_id), and blood_transactions (partitioned by date
bucket). Records are immutable once inserted except batch quantities, which
change only through `apply_inventory_delta`.

`BloodStore()` is purely in-memory; `BloodStore.open(data_dir)` adds durable
append-only JSONL segments (`<table>.jsonl`, plus
`blood_inventory.deltas.jsonl` for quantity changes, compacted on close).
Consistency contract: one writer at a time per store, read-your-writes within
a handle; any other backend exposing the same methods can be plugged into the
simulation layer.
"""

from __future__ import annotations

import dataclasses
import heapq
import json
from bisect import insort
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

from .domain import BloodType, Component
from .synthgen import BloodBank, Dataset, InventoryBatch, TransactionRecord, User


class StoreError(Exception):
    pass


class ConflictError(StoreError):
    """Insert with an id that already exists."""


class NotFoundError(StoreError):
    """Lookup of an unknown id or partition."""


class SchemaError(StoreError):
    """Record does not satisfy the table's invariants."""


class UnderflowError(StoreError):
    """Quantity delta would drive a batch negative."""


TABLES = ("blood_banks", "users", "blood_inventory", "blood_transactions")

_RECORD_TYPES = {
    "blood_banks": BloodBank,
    "users": User,
    "blood_inventory": InventoryBatch,
    "blood_transactions": TransactionRecord,
}

_FROM_DICT = {
    "blood_banks": BloodBank.from_dict,
    "users": User.from_dict,
    "blood_inventory": InventoryBatch.from_dict,
    "blood_transactions": TransactionRecord.from_dict,
}


def _record_id(table: str, record) -> int | str:
    if table == "blood_banks":
        return record.bank_id
    if table == "users":
        return record.user_id
    if table == "blood_inventory":
        return record.batch_id
    return record.tx_id


def _validate(table: str, record) -> None:
    expected = _RECORD_TYPES[table]
    if not isinstance(record, expected):
        raise SchemaError(f"table {table} expects {expected.__name__}, got {type(record).__name__}")
    if table == "blood_inventory":
        if record.quantity < 0:
            raise SchemaError("batch quantity must be non-negative")
    elif table == "blood_transactions":
        if record.kind == "donation":
            if record.outcome != "accepted":
                raise SchemaError("donations are accepted by construction")
            if not record.batch_ids:
                raise SchemaError("donation must reference the batch it filled")
        elif record.kind == "request":
            if record.outcome not in ("accepted", "denied"):
                raise SchemaError("requests carry outcome accepted or denied")
            if (record.outcome == "accepted") != bool(record.batch_ids):
                raise SchemaError("batch_ids must be non-empty exactly for accepted requests")
        else:
            raise SchemaError(f"unknown transaction kind {record.kind!r}")


class BloodStore:
    """Single-writer store with read-your-writes and optional JSONL persistence."""

    def __init__(self, data_dir: str | Path | None = None):
        self._tables: dict[str, dict] = {t: {} for t in TABLES}
        # bank_id -> {batch_id: InventoryBatch}
        self._inventory_by_bank: dict[int, dict[str, InventoryBatch]] = {}
        # date bucket (ISO string) -> [tx_id]
        self._tx_by_date: dict[str, list[str]] = {}
        # (bank_id, component) -> sorted [(expiration ordinal, batch_id)]
        self._live_index: dict[tuple[int, Component], list[tuple[int, str]]] = {}
        # global expiry queue consumed by take_expired_batches
        self._expiry_heap: list[tuple[int, str]] = []
        self.current_date: date | None = None
        self._data_dir = Path(data_dir) if data_dir is not None else None
        self._files: dict[str, object] = {}
        if self._data_dir is not None:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            self._load_segments()
            self._open_segments()

    @classmethod
    def open(cls, data_dir: str | Path) -> "BloodStore":
        return cls(data_dir=data_dir)

    # -- persistence ------------------------------------------------------

    def _segment_path(self, name: str) -> Path:
        assert self._data_dir is not None
        return self._data_dir / f"{name}.jsonl"

    def _load_segments(self) -> None:
        for table in TABLES:
            path = self._segment_path(table)
            if not path.exists():
                continue
            parse = _FROM_DICT[table]
            with path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._index_record(table, parse(json.loads(line)))
        deltas = self._segment_path("blood_inventory.deltas")
        if deltas.exists():
            with deltas.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    d = json.loads(line)
                    batch = self._tables["blood_inventory"].get(d["batch_id"])
                    if batch is None:
                        raise SchemaError(f"delta for unknown batch {d['batch_id']!r}")
                    batch.quantity += int(d["delta"])

    def _open_segments(self) -> None:
        for name in TABLES + ("blood_inventory.deltas",):
            self._files[name] = self._segment_path(name).open("a", encoding="utf-8")

    def _append(self, name: str, payload: dict) -> None:
        fh = self._files.get(name)
        if fh is None:
            return
        fh.write(json.dumps(payload, sort_keys=True))
        fh.write("\n")
        fh.flush()

    def close(self) -> None:
        """Flush and, for file-backed stores, compact quantity deltas."""
        if self._data_dir is None:
            return
        for fh in self._files.values():
            fh.close()
        self._files = {}
        # fold deltas into the base segment so reopen replays nothing
        inv_path = self._segment_path("blood_inventory")
        tmp = inv_path.with_suffix(".jsonl.tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for batch in self._tables["blood_inventory"].values():
                fh.write(json.dumps(batch.to_dict(), sort_keys=True))
                fh.write("\n")
        tmp.replace(inv_path)
        deltas = self._segment_path("blood_inventory.deltas")
        if deltas.exists():
            deltas.unlink()

    def __enter__(self) -> "BloodStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- writes -----------------------------------------------------------

    def _index_record(self, table: str, record) -> None:
        rid = _record_id(table, record)
        if rid in self._tables[table]:
            raise ConflictError(f"{table} already contains id {rid!r}")
        self._tables[table][rid] = record
        if table == "blood_inventory":
            self._inventory_by_bank.setdefault(record.bank_id, {})[record.batch_id] = record
            exp = record.expiration_date.toordinal()
            insort(self._live_index.setdefault((record.bank_id, record.component), []),
                   (exp, record.batch_id))
            heapq.heappush(self._expiry_heap, (exp, record.batch_id))
        elif table == "blood_transactions":
            self._tx_by_date.setdefault(record.date.isoformat(), []).append(record.tx_id)

    def insert_record(self, table: str, record) -> int | str:
        if table not in TABLES:
            raise SchemaError(f"unknown table {table!r}")
        _validate(table, record)
        # own a copy: batch quantities mutate via deltas and must never leak
        # back into the caller's objects (or vice versa)
        if table == "blood_inventory":
            record = dataclasses.replace(record)
        elif table == "blood_transactions":
            record = dataclasses.replace(record, batch_ids=list(record.batch_ids))
        self._index_record(table, record)
        self._append(table, record.to_dict())
        return _record_id(table, record)

    def insert_dataset(self, dataset: Dataset) -> None:
        for bank in dataset.banks:
            self.insert_record("blood_banks", bank)
        for user in dataset.users:
            self.insert_record("users", user)
        for batch in dataset.inventory:
            self.insert_record("blood_inventory", batch)
        for tx in dataset.transactions:
            self.insert_record("blood_transactions", tx)

    def apply_inventory_delta(self, batch_id: str, delta: int) -> int:
        """Adjust a batch quantity; rejects underflow without changing state."""
        batch = self._tables["blood_inventory"].get(batch_id)
        if batch is None:
            raise NotFoundError(f"unknown batch {batch_id!r}")
        new_quantity = batch.quantity + delta
        if new_quantity < 0:
            raise UnderflowError(
                f"batch {batch_id} holds {batch.quantity}, delta {delta} would underflow"
            )
        batch.quantity = new_quantity
        self._append("blood_inventory.deltas", {"batch_id": batch_id, "delta": delta})
        return new_quantity

    def set_current_date(self, d: date) -> None:
        self.current_date = d

    # -- reads ------------------------------------------------------------

    def get(self, table: str, record_id):
        if table not in TABLES:
            raise SchemaError(f"unknown table {table!r}")
        record = self._tables[table].get(record_id)
        if record is None:
            raise NotFoundError(f"{table} has no id {record_id!r}")
        return record

    def count(self, table: str) -> int:
        return len(self._tables[table])

    def banks(self) -> list[BloodBank]:
        return list(self._tables["blood_banks"].values())

    def users(self) -> list[User]:
        return list(self._tables["users"].values())

    def query_inventory_by_bank(self, bank_id: int) -> list[InventoryBatch]:
        """All of a bank's batches (zero-quantity included), expiry-ascending."""
        if bank_id not in self._tables["blood_banks"]:
            raise NotFoundError(f"unknown bank {bank_id!r}")
        batches = list(self._inventory_by_bank.get(bank_id, {}).values())
        batches.sort(key=lambda b: (b.expiration_date, b.batch_id))
        return batches

    def query_transactions_by_date(self, d: date) -> list[TransactionRecord]:
        tx = self._tables["blood_transactions"]
        return [tx[i] for i in self._tx_by_date.get(d.isoformat(), [])]

    def aggregate_quantity(self, blood_type: BloodType, component: Component) -> int:
        """Network-wide units of one (type, component), unexpired as of current_date."""
        cutoff = self.current_date
        total = 0
        for batch in self._tables["blood_inventory"].values():
            if batch.blood_type is not blood_type or batch.component is not component:
                continue
            if cutoff is not None and batch.expiration_date < cutoff:
                continue
            total += batch.quantity
        return total

    def live_batches(self, bank_id: int, component: Component, as_of: date) -> Iterator[InventoryBatch]:
        """One bank's usable batches of a component in (expiry, batch_id) order.

        Usable means quantity > 0 and expiration_date >= as_of. Spent entries
        are dropped from the scan index as they are encountered.
        """
        key = (bank_id, component)
        entries = self._live_index.get(key)
        if not entries:
            return
        batches = self._tables["blood_inventory"]
        dead: list[int] = []
        for pos, (_exp, batch_id) in enumerate(entries):
            batch = batches[batch_id]
            if batch.quantity == 0:
                dead.append(pos)
                continue
            if batch.expiration_date < as_of:
                continue
            yield batch
        if dead:
            self._live_index[key] = [e for pos, e in enumerate(entries) if pos not in set(dead)]

    def take_expired_batches(self, as_of: date) -> list[InventoryBatch]:
        """Consume and return batches with expiration_date < as_of and stock left.

        Consumed entries are never revisited, so callers must zero what they
        receive and call with non-decreasing dates.
        """
        expired = []
        cutoff = as_of.toordinal()
        batches = self._tables["blood_inventory"]
        while self._expiry_heap and self._expiry_heap[0][0] < cutoff:
            _exp, batch_id = heapq.heappop(self._expiry_heap)
            batch = batches[batch_id]
            if batch.quantity > 0:
                expired.append(batch)
        return expired

    def iter_inventory(self) -> Iterable[InventoryBatch]:
        return self._tables["blood_inventory"].values()

    def iter_transactions(self) -> Iterable[TransactionRecord]:
        return self._tables["blood_transactions"].values()
