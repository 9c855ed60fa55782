"""Demand-paging simulator with a bounded resident set and FIFO eviction.

On a fault the pager evicts the FIFO head (if the resident set is full) by
writing it through the configured backend, then loads the faulting page with
a plain backend read.  Every eviction writes, dirty or not.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from .costs import CostModel, VirtualClock
from .eager import EagerDetWoOram
from .errors import ConfigError, OutOfMemory
from .geometry import OramConfig, OramState
from .parallel import ParallelDetWoOram
from .sealer import SealKeys, next_nonce, seal, unseal
from .store import AccessTrace, BackingStore
from .woram import DetWoOram
from .workloads import WorkloadSpec

BACKENDS = ("noram", "det", "eager", "parallel")


class PlainBackend:
    """Baseline without ORAM: page ``v`` is sealed into slot ``v`` on eviction."""

    def __init__(self, pages: int, page_size: int, keys: SealKeys | None = None,
                 store: BackingStore | None = None, clock: VirtualClock | None = None):
        self.cfg = None
        self.page_size = page_size
        self.keys = keys or SealKeys.generate()
        self.store = store if store is not None else BackingStore(pages, page_size)
        self.clock = clock
        self.state = OramState(pos=[])
        zero = bytes(page_size)
        for v in range(pages):
            self.store.write(v, seal(zero, v, self.keys, next_nonce(self.state)))

    @property
    def capacity(self) -> int:
        return self.store.slot_count

    def _charge(self, op: str) -> None:
        if self.clock is not None:
            self.clock.charge(op)

    def write(self, a: int, d: bytes) -> None:
        self.store.write(a, seal(d, a, self.keys, next_nonce(self.state), self.page_size))
        self._charge("seal")
        self._charge("slot_write")

    def read(self, a: int) -> bytes:
        raw = self.store.read(a)
        self._charge("slot_read")
        plain = unseal(raw, a, self.keys)
        self._charge("unseal")
        return plain

    def quiesce(self) -> None:
        pass

    def close(self) -> None:
        pass


@dataclass
class PagerConfig:
    resident_limit: int = 15
    page_size: int = 4096
    backend: str = "det"
    k: int = 3
    main_count: int | None = None
    holding_count: int | None = None
    threads: int | None = None
    seed: int | None = None
    cost: CostModel = field(default_factory=CostModel)
    snapshot_rounds: bool = False
    background: bool = True
    store_path: str | None = None
    audit: bool = False

    def __post_init__(self):
        if self.resident_limit < 1:
            raise ConfigError("resident_limit must be >= 1")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if (self.main_count is None) != (self.holding_count is None):
            raise ConfigError("give both main_count and holding_count, or neither")

    def oram_config(self, pages: int) -> OramConfig:
        if self.main_count is not None:
            return OramConfig(self.main_count, self.holding_count, self.page_size)
        return OramConfig.for_pages(pages, self.k, self.page_size)


def build_backend(cfg: PagerConfig, pages: int, clock: VirtualClock | None = None):
    keys = SealKeys.derive(cfg.seed) if cfg.seed is not None else SealKeys.generate()
    if cfg.backend == "noram":
        store = BackingStore(pages, cfg.page_size, cfg.store_path)
        return PlainBackend(pages, cfg.page_size, keys, store, clock)
    ocfg = cfg.oram_config(pages)
    store = BackingStore(ocfg.total_slots, ocfg.page_size, cfg.store_path)
    if cfg.backend == "det":
        return DetWoOram(ocfg, keys, store, clock)
    if cfg.backend == "eager":
        return EagerDetWoOram(ocfg, keys, store, clock, background=cfg.background)
    return ParallelDetWoOram(ocfg, keys, store, clock, threads=cfg.threads, audit=cfg.audit)


@dataclass
class Metrics:
    accesses: int = 0
    hits: int = 0
    faults: int = 0
    evictions: int = 0
    slot_reads: int = 0
    slot_writes: int = 0
    service_virtual: float = 0.0
    service_wall: float = 0.0
    oram_virtual: float = 0.0
    oram_wall: float = 0.0
    spawn_virtual: float = 0.0
    spawn_wall: float = 0.0
    virtual_time: float = 0.0
    wall_time: float = 0.0

    def per_fault(self, clock: str = "virtual") -> float:
        total = self.service_virtual if clock == "virtual" else self.service_wall
        return total / self.faults if self.faults else 0.0


class Pager:
    def __init__(self, cfg: PagerConfig, pages: int, backend=None):
        self.cfg = cfg
        self.clock = VirtualClock(cfg.cost)
        self.backend = backend if backend is not None else build_backend(cfg, pages, self.clock)
        self.store: BackingStore = self.backend.store
        self.backend.quiesce()
        self.frames: dict[int, bytes] = {}
        self.fifo: deque[int] = deque()
        self.metrics = Metrics()
        self.evicted: list[int] = []
        self.trace_start = len(self.store.trace)
        self._reads0 = self.store.reads
        self._writes0 = self.store.writes
        if cfg.snapshot_rounds:
            self.store.mark_epoch()

    @property
    def capacity(self) -> int:
        return self.backend.capacity

    def resident(self, vpage: int) -> bool:
        return vpage in self.frames

    def _evict(self) -> None:
        victim = self.fifo.popleft()
        page = self.frames.pop(victim)
        v0, w0 = self.clock.now, time.perf_counter()
        self.backend.write(victim, page)
        self.metrics.oram_virtual += self.clock.now - v0
        self.metrics.oram_wall += time.perf_counter() - w0
        self.metrics.evictions += 1
        self.evicted.append(victim)
        if self.cfg.snapshot_rounds:
            self.backend.quiesce()
            self.store.mark_epoch()

    def access(self, vpage: int, kind: str = "r", data: bytes | None = None):
        if not 0 <= vpage < self.capacity:
            raise OutOfMemory(f"page {vpage} beyond backing capacity {self.capacity}")
        if kind == "w" and (data is None or len(data) != self.cfg.page_size):
            raise ValueError("a write access needs one full page of data")
        m = self.metrics
        m.accesses += 1
        self.clock.charge("compute")
        if vpage in self.frames:
            m.hits += 1
        else:
            m.faults += 1
            v0, w0 = self.clock.now, time.perf_counter()
            if len(self.frames) >= self.cfg.resident_limit:
                self._evict()
            self.frames[vpage] = self.backend.read(vpage)
            self.fifo.append(vpage)
            m.service_virtual += self.clock.now - v0
            m.service_wall += time.perf_counter() - w0
        if kind == "w":
            self.frames[vpage] = bytes(data)
            return None
        return self.frames[vpage]

    def finish(self) -> Metrics:
        """Drain background work and fold store counters into the metrics."""
        self.backend.quiesce()
        m = self.metrics
        m.slot_reads = self.store.reads - self._reads0
        m.slot_writes = self.store.writes - self._writes0
        m.virtual_time = self.clock.now
        m.spawn_virtual = getattr(self.backend, "virtual_spawn_time", 0.0)
        m.spawn_wall = getattr(self.backend, "spawn_time", 0.0)
        return m

    def close(self) -> None:
        self.backend.close()
        self.store.close()


@dataclass
class RunResult:
    metrics: Metrics
    trace: AccessTrace
    trace_start: int
    store: BackingStore
    evicted: list[int]

    def write_indices(self) -> list[int]:
        return self.trace.write_indices(self.trace_start)


def run_workload(spec: WorkloadSpec, cfg: PagerConfig, fault_budget: int | None = None,
                 pager: Pager | None = None) -> RunResult:
    """Replay ``spec`` through a fresh pager, stopping at the fault budget."""
    pager = pager or Pager(cfg, spec.pages)
    w0 = time.perf_counter()
    try:
        for n, (kind, vpage) in enumerate(spec.ops):
            if (fault_budget is not None and pager.metrics.faults >= fault_budget
                    and not pager.resident(vpage)):
                break
            data = spec.page_data(n, cfg.page_size) if kind == "w" else None
            pager.access(vpage, kind, data)
        metrics = pager.finish()
    finally:
        pager.backend.close()
    metrics.wall_time = time.perf_counter() - w0
    return RunResult(metrics, pager.store.trace, pager.trace_start, pager.store, pager.evicted)
