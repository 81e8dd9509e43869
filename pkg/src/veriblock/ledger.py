"""Append-only hash-chained ledger with an ordered event list.

Transactions queue in a pending pool and are sealed into blocks either by
explicit ``seal_block`` calls or automatically (block full, or the block
interval elapsed on the simulation clock). Events attached to transactions
are emitted when their block is sealed, in block order then intra-block order.
"""

from __future__ import annotations

import enum
import hashlib
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional

from .errors import ChainFormatError, ClockRegression, EmptyPayload

HASH_NAME = "sha256"
DIGEST_SIZE = 32
ZERO_HASH = bytes(DIGEST_SIZE)
DUMP_MAGIC = b"VBCHAIN1"

DEFAULT_BLOCK_INTERVAL = 12
DEFAULT_BLOCK_CAPACITY = 200


def digest(data: bytes) -> bytes:
    return hashlib.new(HASH_NAME, data).digest()


class EventKind(str, enum.Enum):
    INCIDENT_REPORTED = "IncidentReported"
    EVIDENCE_SUBMITTED = "EvidenceSubmitted"
    TRUST_SCORE_REQUESTED = "TrustScoreRequested"
    TRUST_SCORE_DELIVERED = "TrustScoreDelivered"
    REQUEST_REFUNDED = "RequestRefunded"


@dataclass(frozen=True)
class Transaction:
    tx_id: int
    sender: str
    payload: bytes
    sim_time: int

    def encode(self) -> bytes:
        sender = self.sender.encode("utf-8", errors="surrogateescape")
        return b"".join(
            (
                struct.pack(">QqI", self.tx_id, self.sim_time, len(sender)),
                sender,
                struct.pack(">I", len(self.payload)),
                self.payload,
            )
        )


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    body_hash: bytes
    transactions: tuple[Transaction, ...]
    sealed_at: int
    note: str = ""
    digest: bytes = ZERO_HASH

    def header_bytes(self) -> bytes:
        note = self.note.encode("utf-8")
        return b"".join(
            (
                struct.pack(">Q", self.height),
                self.prev_hash,
                self.body_hash,
                struct.pack(">qI", self.sealed_at, len(note)),
                note,
            )
        )

    def encode(self) -> bytes:
        """Canonical binary form: header, stored digest, then transactions."""
        parts = [self.header_bytes(), self.digest, struct.pack(">I", len(self.transactions))]
        parts.extend(tx.encode() for tx in self.transactions)
        return b"".join(parts)

    @property
    def tx_ids(self) -> list[int]:
        return [tx.tx_id for tx in self.transactions]


def body_hash_of(transactions: Iterable[Transaction]) -> bytes:
    return digest(b"".join(tx.encode() for tx in transactions))


def make_block(
    height: int,
    prev_hash: bytes,
    transactions: Iterable[Transaction],
    sealed_at: int,
    note: str = "",
) -> Block:
    txs = tuple(transactions)
    block = Block(height, prev_hash, body_hash_of(txs), txs, sealed_at, note)
    return Block(
        height, prev_hash, block.body_hash, txs, sealed_at, note, digest(block.header_bytes())
    )


@dataclass(frozen=True)
class LedgerEvent:
    event_seq: int
    kind: EventKind
    subject_id: Any
    emitted_at: int
    payload: Any
    tx_id: int


@dataclass(frozen=True)
class PendingEvent:
    """Event a contract attaches to a transaction; emitted when sealed."""

    kind: EventKind
    subject_id: Any
    payload: Any


def first_invalid_height(blocks: list[Block]) -> Optional[int]:
    """Height of the first block failing a link or hash check, or None."""
    prev_digest = ZERO_HASH
    for index, block in enumerate(blocks):
        if block.height != index:
            return index
        if index == 0 and block.note != HASH_NAME:
            return index
        if block.prev_hash != prev_digest:
            return index
        if block.body_hash != body_hash_of(block.transactions):
            return index
        if block.digest != digest(block.header_bytes()):
            return index
        prev_digest = block.digest
    return None


def chain_is_valid(blocks: list[Block]) -> bool:
    if not blocks:
        return False
    try:
        return first_invalid_height(blocks) is None
    except Exception:  # malformed field types count as corruption
        return False


class Ledger:
    """Single-writer simulated blockchain.

    ``block_interval`` of None disables time-based sealing; blocks are then
    sealed only explicitly or when ``block_capacity`` pending transactions
    are waiting.
    """

    def __init__(
        self,
        block_capacity: int = DEFAULT_BLOCK_CAPACITY,
        block_interval: Optional[int] = DEFAULT_BLOCK_INTERVAL,
        genesis_time: int = 0,
    ) -> None:
        if block_capacity < 1:
            raise ValueError("block_capacity must be >= 1")
        if block_interval is not None and block_interval <= 0:
            raise ValueError("block_interval must be positive")
        self.block_capacity = block_capacity
        self.block_interval = block_interval
        self.blocks: list[Block] = [make_block(0, ZERO_HASH, (), genesis_time, HASH_NAME)]
        self._pending: list[tuple[Transaction, Optional[PendingEvent]]] = []
        self._events: list[LedgerEvent] = []
        self._tx_index: dict[int, tuple[int, int]] = {}
        self._next_tx_id = 1
        self._clock = genesis_time

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    @property
    def clock(self) -> int:
        return self._clock

    @property
    def pending(self) -> list[Transaction]:
        return [tx for tx, _ in self._pending]

    def advance(self, sim_time: int) -> None:
        """Move the clock forward, sealing if the block interval has elapsed."""
        if sim_time < self._clock:
            raise ClockRegression(f"sim_time {sim_time} < last accepted {self._clock}")
        self._clock = sim_time
        if (
            self.block_interval is not None
            and self._pending
            and sim_time >= self.blocks[-1].sealed_at + self.block_interval
        ):
            self.seal_block(sim_time)

    def append_transaction(
        self,
        sender: str,
        payload: bytes,
        sim_time: int,
        event: Optional[PendingEvent] = None,
    ) -> int:
        if not payload:
            raise EmptyPayload("transaction payload must be non-empty")
        self.advance(sim_time)
        if len(self._pending) >= self.block_capacity:
            self.seal_block(sim_time)
        tx = Transaction(self._next_tx_id, sender, bytes(payload), sim_time)
        self._next_tx_id += 1
        self._pending.append((tx, event))
        return tx.tx_id

    def seal_block(self, sim_time: Optional[int] = None) -> Block:
        if sim_time is None:
            sim_time = self._clock
        elif sim_time < self._clock:
            raise ClockRegression(f"sim_time {sim_time} < last accepted {self._clock}")
        self._clock = sim_time
        pending, self._pending = self._pending, []
        block = make_block(
            self.height + 1, self.blocks[-1].digest, (tx for tx, _ in pending), sim_time
        )
        self.blocks.append(block)
        for position, (tx, event) in enumerate(pending):
            self._tx_index[tx.tx_id] = (block.height, position)
            if event is not None:
                self._events.append(
                    LedgerEvent(
                        len(self._events) + 1,
                        event.kind,
                        event.subject_id,
                        sim_time,
                        event.payload,
                        tx.tx_id,
                    )
                )
        return block

    def verify_chain(self) -> bool:
        return chain_is_valid(self.blocks)

    def events_since(self, cursor: int) -> list[LedgerEvent]:
        if cursor < 0:
            raise ValueError("cursor must be >= 0")
        return self._events[cursor:]

    @property
    def last_event_seq(self) -> int:
        return len(self._events)

    def get_transaction(self, tx_id: int) -> Transaction:
        """Look up a sealed or pending transaction."""
        if tx_id in self._tx_index:
            height, position = self._tx_index[tx_id]
            return self.blocks[height].transactions[position]
        for tx, _ in self._pending:
            if tx.tx_id == tx_id:
                return tx
        raise KeyError(tx_id)

    def block_of(self, tx_id: int) -> Optional[int]:
        """Height of the block containing ``tx_id``; None while pending."""
        located = self._tx_index.get(tx_id)
        return None if located is None else located[0]

    # exports

    def dump_bytes(self) -> bytes:
        return dump_chain(self.blocks)

    def write_dump(self, path: str | Path) -> None:
        Path(path).write_bytes(self.dump_bytes())

    def debug_lines(self) -> list[str]:
        return [debug_json(block) for block in self.blocks]

    def write_debug(self, path: str | Path) -> None:
        Path(path).write_text("".join(line + "\n" for line in self.debug_lines()))


def debug_json(block: Block) -> str:
    return json.dumps(
        {
            "height": block.height,
            "prev_hash": block.prev_hash.hex(),
            "body_hash": block.body_hash.hex(),
            "tx_ids": block.tx_ids,
        },
        separators=(",", ":"),
    )


def dump_chain(blocks: Iterable[Block]) -> bytes:
    out = io.BytesIO()
    out.write(DUMP_MAGIC)
    for block in blocks:
        encoded = block.encode()
        out.write(struct.pack(">I", len(encoded)))
        out.write(encoded)
    return out.getvalue()


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise ChainFormatError(f"truncated input at offset {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def exhausted(self) -> bool:
        return self.pos == len(self.data)


def _decode_block(data: bytes) -> Block:
    r = _Reader(data)
    (height,) = r.unpack(">Q")
    prev_hash = r.take(DIGEST_SIZE)
    body_hash = r.take(DIGEST_SIZE)
    sealed_at, note_len = r.unpack(">qI")
    try:
        note = r.take(note_len).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ChainFormatError("block note is not UTF-8") from exc
    block_digest = r.take(DIGEST_SIZE)
    (count,) = r.unpack(">I")
    txs = []
    for _ in range(count):
        tx_id, sim_time, sender_len = r.unpack(">QqI")
        sender_raw = r.take(sender_len)
        (payload_len,) = r.unpack(">I")
        payload = r.take(payload_len)
        try:
            sender = sender_raw.decode("utf-8")
        except UnicodeDecodeError:
            # keep the raw bytes reachable so hash checks flag the block
            sender = sender_raw.decode("utf-8", errors="surrogateescape")
        txs.append(Transaction(tx_id, sender, payload, sim_time))
    if not r.exhausted:
        raise ChainFormatError("trailing bytes inside block record")
    return Block(height, prev_hash, body_hash, tuple(txs), sealed_at, note, block_digest)


def load_chain(data: bytes) -> list[Block]:
    """Parse a canonical chain dump. Raises ChainFormatError if malformed."""
    r = _Reader(data)
    if r.take(len(DUMP_MAGIC)) != DUMP_MAGIC:
        raise ChainFormatError("bad magic")
    blocks = []
    while not r.exhausted:
        (length,) = r.unpack(">I")
        blocks.append(_decode_block(r.take(length)))
    if not blocks:
        raise ChainFormatError("dump contains no blocks")
    return blocks
