"""Untrusted backing store with full access tracing and snapshot support.

A store is a fixed array of equally sized slots.  Every ``read``/``write``
appends one event to the store's :class:`AccessTrace`; snapshots hash every
slot so an observer can diff two points in time.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple

from .errors import OutOfRange, ShapeMismatch, SizeMismatch
from .geometry import MAC_SIZE, NONCE_SIZE
from .sealer import SealedSlot


class TraceEvent(NamedTuple):
    seq: int
    kind: str  # "r" or "w"
    slot: int


class AccessTrace:
    def __init__(self):
        self.events: list[TraceEvent] = []
        self._lock = threading.Lock()

    def append(self, kind: str, slot: int) -> TraceEvent:
        with self._lock:
            ev = TraceEvent(len(self.events), kind, slot)
            self.events.append(ev)
            return ev

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def write_indices(self, since: int = 0) -> list[int]:
        return [e.slot for e in self.events[since:] if e.kind == "w"]

    def read_indices(self, since: int = 0) -> list[int]:
        return [e.slot for e in self.events[since:] if e.kind == "r"]

    def dump_jsonl(self, fp: IO[str], since: int = 0) -> None:
        for e in self.events[since:]:
            fp.write(json.dumps({"seq": e.seq, "kind": e.kind, "slot": e.slot},
                                separators=(",", ":")))
            fp.write("\n")

    @staticmethod
    def load_jsonl(lines: Iterable[str]) -> list[TraceEvent]:
        out = []
        for line in lines:
            line = line.strip()
            if line:
                d = json.loads(line)
                out.append(TraceEvent(int(d["seq"]), d["kind"], int(d["slot"])))
        return out


@dataclass(frozen=True)
class Snapshot:
    digests: tuple[bytes, ...]

    def __len__(self):
        return len(self.digests)


def diff(a: Snapshot, b: Snapshot) -> set[int]:
    """Slots whose contents differ between two snapshots of the same store."""
    if len(a) != len(b):
        raise ShapeMismatch(f"snapshots cover {len(a)} and {len(b)} slots")
    return {i for i, (x, y) in enumerate(zip(a.digests, b.digests)) if x != y}


class BackingStore:
    """``slot_count`` sealed slots, in memory or in a single flat file.

    The file backend keeps slot ``i`` at byte offset ``i * slot_size`` with no
    header.  Concurrent writes to distinct slots are safe for both backends.
    """

    def __init__(self, slot_count: int, page_size: int, path: str | os.PathLike | None = None):
        if slot_count < 1:
            raise ValueError("store needs at least one slot")
        self.slot_count = slot_count
        self.page_size = page_size
        self.slot_size = NONCE_SIZE + page_size + MAC_SIZE
        self.trace = AccessTrace()
        self.reads = 0
        self.writes = 0
        self.epochs: list[Snapshot] = []
        self._count_lock = threading.Lock()
        self.path = os.fspath(path) if path is not None else None
        if self.path is None:
            self._slots: list[bytes] | None = [bytes(self.slot_size)] * slot_count
            self._fd = None
        else:
            self._slots = None
            self._fd = os.open(self.path, os.O_RDWR | os.O_CREAT | os.O_TRUNC, 0o600)
            os.ftruncate(self._fd, slot_count * self.slot_size)

    @property
    def backend(self) -> str:
        return "memory" if self._fd is None else "file"

    def _check(self, idx: int) -> None:
        if not 0 <= idx < self.slot_count:
            raise OutOfRange(f"slot {idx} outside [0, {self.slot_count})")

    def _get(self, idx: int) -> bytes:
        if self._slots is not None:
            return self._slots[idx]
        return os.pread(self._fd, self.slot_size, idx * self.slot_size)

    def _put(self, idx: int, raw: bytes) -> None:
        if self._slots is not None:
            self._slots[idx] = raw
        else:
            os.pwrite(self._fd, raw, idx * self.slot_size)

    def read(self, idx: int) -> SealedSlot:
        self._check(idx)
        raw = self._get(idx)
        self.trace.append("r", idx)
        with self._count_lock:
            self.reads += 1
        return SealedSlot.from_bytes(raw, self.page_size)

    def write(self, idx: int, slot: SealedSlot | bytes) -> None:
        self._check(idx)
        raw = slot.to_bytes() if isinstance(slot, SealedSlot) else bytes(slot)
        if len(raw) != self.slot_size:
            raise SizeMismatch(f"slot of {len(raw)} bytes, store expects {self.slot_size}")
        self._put(idx, raw)
        self.trace.append("w", idx)
        with self._count_lock:
            self.writes += 1

    # Out-of-band access: what an active adversary does to the memory.
    # Nothing here is traced.

    def peek(self, idx: int) -> bytes:
        self._check(idx)
        return bytes(self._get(idx))

    def tamper(self, idx: int, raw: bytes) -> None:
        self._check(idx)
        if len(raw) != self.slot_size:
            raise SizeMismatch("tampered slot must keep the slot size")
        self._put(idx, bytes(raw))

    def snapshot(self) -> Snapshot:
        return Snapshot(tuple(hashlib.sha256(self._get(i)).digest()
                              for i in range(self.slot_count)))

    def mark_epoch(self) -> Snapshot:
        """Take a snapshot and append it to ``epochs`` (adversary polling point)."""
        s = self.snapshot()
        self.epochs.append(s)
        return s

    def close(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
            self._slots = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
