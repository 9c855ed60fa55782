"""Base deterministic write-only ORAM engine."""

from __future__ import annotations

from typing import Mapping

from .costs import VirtualClock
from .errors import AddressOutOfRange, IntegrityError, InvariantError, SealError
from .geometry import OramConfig, OramState, holding_slot, refresh_indices
from .sealer import SealKeys, next_nonce, seal, unseal
from .store import BackingStore


class DetWoOram:
    """Write-only ORAM over a :class:`BackingStore` of ``N + M`` slots.

    Write ``p`` seals the new page into holding slot ``N + (p mod M)`` and then
    refreshes the next ``floor((p+1)K) - floor(pK)`` main slots, each from the
    latest copy of its block.  Reads go straight to ``pos[a]``.

    With ``check_holding=True`` every write first verifies that no block
    still lives in the holding slot about to be overwritten.
    """

    def __init__(self, cfg: OramConfig, keys: SealKeys | None = None,
                 store: BackingStore | None = None, clock: VirtualClock | None = None,
                 check_holding: bool = False):
        self.cfg = cfg
        self.keys = keys or SealKeys.generate()
        self.store = store if store is not None else BackingStore(cfg.total_slots, cfg.page_size)
        if self.store.slot_count != cfg.total_slots or self.store.page_size != cfg.page_size:
            raise ValueError("store shape does not match the ORAM geometry")
        self.state = OramState.fresh(cfg)
        self.clock = clock
        self.check_holding = check_holding
        self._poisoned: IntegrityError | None = None
        self._zero = bytes(cfg.page_size)
        self._initialize()

    def _initialize(self) -> None:
        for i in range(self.cfg.total_slots):
            self.store.write(i, seal(self._zero, i, self.keys, next_nonce(self.state)))

    @property
    def pos(self) -> list[int]:
        return self.state.pos

    @property
    def p(self) -> int:
        return self.state.p

    @property
    def capacity(self) -> int:
        return self.cfg.main_count

    def _charge(self, op: str, n: int = 1) -> None:
        if self.clock is not None:
            self.clock.charge(op, n)

    def _guard(self) -> None:
        if self._poisoned is not None:
            raise IntegrityError("instance poisoned by an earlier integrity failure") \
                from self._poisoned

    def _poison(self, exc: IntegrityError) -> None:
        if self._poisoned is None:
            self._poisoned = exc

    def _check_addr(self, a: int) -> None:
        if not 0 <= a < self.cfg.main_count:
            raise AddressOutOfRange(f"block {a} outside [0, {self.cfg.main_count})")

    def _check_page(self, d: bytes) -> None:
        if len(d) != self.cfg.page_size:
            raise SealError(f"page of {len(d)} bytes, expected {self.cfg.page_size}")

    def _open(self, slot: int) -> bytes:
        sealed = self.store.read(slot)
        self._charge("slot_read")
        try:
            plain = unseal(sealed, slot, self.keys)
        except IntegrityError as exc:
            self._poison(exc)
            raise
        self._charge("unseal")
        return plain

    def _seal_to(self, slot: int, plain: bytes, nonce: bytes) -> None:
        sealed = seal(plain, slot, self.keys, nonce)
        self._charge("seal")
        self.store.write(slot, sealed)
        self._charge("slot_write")

    def _assert_holding_free(self, h: int) -> None:
        for a, s in enumerate(self.state.pos):
            if s == h:
                raise InvariantError(
                    f"holding slot {h} about to be overwritten at p={self.state.p} "
                    f"but still holds the latest copy of block {a}")

    def write(self, a: int, d: bytes) -> None:
        self._guard()
        self._check_addr(a)
        self._check_page(d)
        cfg, state = self.cfg, self.state
        p = state.p
        h = holding_slot(p, cfg)
        if self.check_holding:
            self._assert_holding_free(h)
        self._seal_to(h, d, next_nonce(state))
        state.pos[a] = h
        for i in refresh_indices(p, cfg):
            plain = self._open(state.pos[i])
            self._seal_to(i, plain, next_nonce(state))
            state.pos[i] = i
        state.p = p + 1

    def read(self, a: int) -> bytes:
        self._guard()
        self._check_addr(a)
        return self._open(self.state.pos[a])

    def quiesce(self) -> None:
        """No background work in the base engine."""

    def close(self) -> None:
        pass


def state_audit(oram, shadow: Mapping[int, bytes]) -> list[int]:
    """Blocks whose ORAM contents disagree with a plain reference map.

    Blocks absent from ``shadow`` are expected to read as the zero page.
    IntegrityError from a tampered store propagates.
    """
    zero = bytes(oram.cfg.page_size)
    return [a for a in range(oram.cfg.main_count) if oram.read(a) != shadow.get(a, zero)]
