"""Deterministic virtual cost clock.

Engines charge unit costs for slot I/O and page crypto as they run, so
benchmark numbers are reproducible regardless of machine or GIL behaviour.
Background work (the eager preloader) is tracked as a separate lane that the
foreground must wait on before touching the preload buffer.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class CostModel:
    slot_read: float = 1.0
    slot_write: float = 1.0
    seal: float = 1.0
    unseal: float = 1.0
    spawn: float = 0.0      # per worker thread started
    compute: float = 0.0    # application work per page access

    @property
    def refresh(self) -> float:
        """One refresh iteration: read, decrypt, re-encrypt, write."""
        return self.slot_read + self.unseal + self.seal + self.slot_write

    def as_dict(self) -> dict:
        return asdict(self)


class VirtualClock:
    def __init__(self, model: CostModel | None = None):
        self.model = model or CostModel()
        self.now = 0.0
        self.background_until = 0.0
        self.waited = 0.0

    def advance(self, amount: float) -> None:
        self.now += amount

    def charge(self, op: str, n: int = 1) -> None:
        self.now += getattr(self.model, op) * n

    def wait_background(self) -> None:
        if self.background_until > self.now:
            self.waited += self.background_until - self.now
            self.now = self.background_until

    def start_background(self, amount: float) -> None:
        start = max(self.now, self.background_until)
        self.background_until = start + amount
