"""Eager variant: refresh the next round's pages before the write arrives.

Because the slots touched by write ``p`` do not depend on the written
address, a background worker can read, decrypt and re-seal the ``count``
main-area targets of round ``p`` ahead of time into a preload buffer.  The
foreground write then only seals the new page into the buffer; a background
unload flushes the buffer to the store in the canonical order (holding slot
first, then refreshed main slots) and immediately preloads the next round.

Buffer lifecycle is strictly ``EMPTY -> LOADING -> READY -> UNLOADING -> EMPTY``.
Foreground writes wait while the buffer is LOADING or UNLOADING.
"""

from __future__ import annotations

import enum
import math
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field

from .costs import VirtualClock
from .errors import IntegrityError, LifecycleError
from .geometry import OramConfig, holding_slot, refresh_indices, refresh_range
from .sealer import SealedSlot, SealKeys, next_nonce, seal, take_nonces, unseal
from .store import BackingStore
from .woram import DetWoOram


class Lifecycle(enum.Enum):
    EMPTY = "empty"
    LOADING = "loading"
    READY = "ready"
    UNLOADING = "unloading"


_NEXT = {
    Lifecycle.EMPTY: Lifecycle.LOADING,
    Lifecycle.LOADING: Lifecycle.READY,
    Lifecycle.READY: Lifecycle.UNLOADING,
    Lifecycle.UNLOADING: Lifecycle.EMPTY,
}


@dataclass
class PreloadBuffer:
    round: int = -1
    holding_slot: int = -1
    holding_entry: SealedSlot | None = None
    main_entries: list[tuple[int, SealedSlot]] = field(default_factory=list)
    lifecycle: Lifecycle = Lifecycle.EMPTY
    committed: bool = False
    transitions: int = 0

    def move(self, to: Lifecycle) -> None:
        if _NEXT[self.lifecycle] is not to:
            raise LifecycleError(f"illegal buffer transition {self.lifecycle.value} -> {to.value}")
        self.lifecycle = to
        self.transitions += 1

    def slots(self) -> list[int]:
        return [self.holding_slot] + [i for i, _ in self.main_entries]

    def entry_for(self, slot: int) -> SealedSlot | None:
        if not self.committed:
            return None
        if slot == self.holding_slot:
            return self.holding_entry
        for i, s in self.main_entries:
            if i == slot:
                return s
        return None

    def clear(self) -> None:
        self.round = -1
        self.holding_slot = -1
        self.holding_entry = None
        self.main_entries = []
        self.committed = False


class EagerDetWoOram(DetWoOram):
    """DetWoORAM with a one-round-ahead preload buffer.

    ``background=True`` runs preload/unload on a single worker thread.
    ``background=False`` runs them inline, which keeps tests deterministic.
    ``auto=False`` leaves :meth:`preload` and :meth:`unload` to the caller.
    """

    def __init__(self, cfg: OramConfig, keys: SealKeys | None = None,
                 store: BackingStore | None = None, clock: VirtualClock | None = None,
                 check_holding: bool = False, background: bool = True, auto: bool = True):
        super().__init__(cfg, keys, store, clock, check_holding)
        self.buffer = PreloadBuffer()
        self.capacity_pages = math.ceil(cfg.ratio) + 1
        self.auto = auto
        self._cond = threading.Condition()
        self._executor = ThreadPoolExecutor(1, thread_name_prefix="preload") if background else None
        self._pending: Future | None = None
        self._bg_error: BaseException | None = None
        if auto:
            nonces = self._preload_nonces(self.state.p)
            self._bg_charge(self._preload_cost(self.state.p))
            self._submit(self.preload, nonces)

    # -- virtual cost of background work ---------------------------------

    def _preload_cost(self, p: int) -> float:
        if self.clock is None:
            return 0.0
        m = self.clock.model
        _, count = refresh_range(p, self.cfg)
        return count * (m.slot_read + m.unseal + m.seal) + m.seal

    def _unload_cost(self, p: int) -> float:
        if self.clock is None:
            return 0.0
        _, count = refresh_range(p, self.cfg)
        return (count + 1) * self.clock.model.slot_write

    def _bg_charge(self, amount: float) -> None:
        if self.clock is not None:
            self.clock.start_background(amount)

    # -- background plumbing ----------------------------------------------

    def _preload_nonces(self, p: int) -> list[bytes]:
        _, count = refresh_range(p, self.cfg)
        return take_nonces(self.state, count + 1)

    def _submit(self, fn, *args) -> None:
        def task():
            try:
                fn(*args)
            except BaseException as exc:
                with self._cond:
                    self._bg_error = exc
                    if isinstance(exc, IntegrityError):
                        self._poison(exc)
                    self._cond.notify_all()
                if self._executor is None:
                    raise

        if self._executor is None:
            task()
        else:
            self._pending = self._executor.submit(task)

    def _raise_bg(self) -> None:
        if self._bg_error is not None:
            raise self._bg_error

    def _unload_then_preload(self, nonces: list[bytes]) -> None:
        self.unload()
        self.preload(nonces)

    # -- buffer operations ------------------------------------------------

    def preload(self, nonces: list[bytes] | None = None) -> None:
        """Fill the buffer with re-sealed copies of round ``p``'s refresh targets."""
        with self._cond:
            if self.buffer.lifecycle is not Lifecycle.EMPTY:
                raise LifecycleError(f"preload needs an empty buffer, it is {self.buffer.lifecycle.value}")
            self._guard()
            self.buffer.move(Lifecycle.LOADING)
            p = self.state.p
            targets = refresh_indices(p, self.cfg)
            sources = [self.state.pos[i] for i in targets]
            if nonces is None:
                nonces = self._preload_nonces(p)
        h = holding_slot(p, self.cfg)
        entries = []
        for i, src, nonce in zip(targets, sources, nonces[1:]):
            raw = self.store.read(src)
            try:
                plain = unseal(raw, src, self.keys)
            except IntegrityError as exc:
                self._poison(exc)
                raise
            entries.append((i, seal(plain, i, self.keys, nonce)))
        placeholder = seal(self._zero, h, self.keys, nonces[0])
        with self._cond:
            b = self.buffer
            b.round, b.holding_slot, b.holding_entry, b.main_entries = p, h, placeholder, entries
            b.committed = False
            b.move(Lifecycle.READY)
            self._cond.notify_all()

    def unload(self) -> None:
        """Flush a committed buffer to the store: holding slot, then main slots."""
        with self._cond:
            b = self.buffer
            if b.lifecycle is not Lifecycle.READY or not b.committed:
                raise LifecycleError(
                    f"unload needs a written buffer, it is {b.lifecycle.value}"
                    + ("" if b.committed else " and uncommitted"))
            b.move(Lifecycle.UNLOADING)
            writes = [(b.holding_slot, b.holding_entry)] + list(b.main_entries)
        for slot, sealed in writes:
            self.store.write(slot, sealed)
        with self._cond:
            self.buffer.clear()
            self.buffer.move(Lifecycle.EMPTY)
            self._cond.notify_all()

    def _wait_ready(self) -> None:
        b = self.buffer
        while not (b.lifecycle is Lifecycle.READY and not b.committed):
            self._raise_bg()
            self._guard()
            if not self.auto or (self._executor is None):
                raise LifecycleError(
                    f"write needs a ready buffer, it is {b.lifecycle.value}"
                    + (" (awaiting unload)" if b.committed else ""))
            self._cond.wait()

    # -- foreground API ---------------------------------------------------

    def write(self, a: int, d: bytes) -> None:
        self._guard()
        self._check_addr(a)
        self._check_page(d)
        if self.clock is not None:
            self.clock.wait_background()
        with self._cond:
            self._wait_ready()
            self._guard()
            state, b = self.state, self.buffer
            p = state.p
            if b.round != p:
                raise LifecycleError(f"buffer serves round {b.round}, write is round {p}")
            h = b.holding_slot
            if self.check_holding:
                self._assert_holding_free(h)
            b.holding_entry = seal(d, h, self.keys, next_nonce(state))
            self._charge("seal")
            in_range = False
            for q, (i, _) in enumerate(b.main_entries):
                if i == a:
                    b.main_entries[q] = (i, seal(d, i, self.keys, next_nonce(state)))
                    self._charge("seal")
                    in_range = True
                state.pos[i] = i
            if not in_range:
                state.pos[a] = h
            b.committed = True
            state.p = p + 1
            if self.auto:
                nonces = self._preload_nonces(p + 1)
                self._bg_charge(self._unload_cost(p) + self._preload_cost(p + 1))
                self._submit(self._unload_then_preload, nonces)

    def read(self, a: int) -> bytes:
        self._guard()
        self._check_addr(a)
        with self._cond:
            slot = self.state.pos[a]
            entry = self.buffer.entry_for(slot)
        if entry is None:
            return self._open(slot)
        try:
            plain = unseal(entry, slot, self.keys)
        except IntegrityError as exc:
            self._poison(exc)
            raise
        self._charge("unseal")
        return plain

    def quiesce(self) -> None:
        """Wait for pending background work; re-raise its failure if any."""
        fut = self._pending
        if fut is not None:
            fut.result()
        with self._cond:
            self._raise_bg()

    def close(self) -> None:
        try:
            self.quiesce()
        finally:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None
