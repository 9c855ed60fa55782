"""Parallel variant: fan the refresh loop of each write out over T workers.

Refresh iterations of one write touch pairwise-distinct main slots and
position-map entries, so they can run in any order.  Iteration ``q`` goes to
worker ``q mod T``.  Nonces are drawn serially before fan-out and the write
counter only advances after every worker has joined.
"""

from __future__ import annotations

import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

from .costs import VirtualClock
from .errors import IntegrityError, InvariantError
from .geometry import OramConfig, holding_slot, refresh_range
from .sealer import SealKeys, next_nonce, seal, take_nonces, unseal
from .store import BackingStore
from .woram import DetWoOram


@dataclass(frozen=True)
class RefreshPartition:
    worker_count: int
    assignments: tuple[tuple[int, ...], ...]

    @property
    def loads(self) -> list[int]:
        return [len(a) for a in self.assignments]


def partition(count: int, threads: int) -> RefreshPartition:
    if count < 0 or threads < 1:
        raise ValueError(f"need count >= 0 and threads >= 1, got {count}, {threads}")
    return RefreshPartition(threads, tuple(tuple(range(j, count, threads)) for j in range(threads)))


class AccessRecorder:
    """Per-round log of which worker read or wrote which slot / pos entry.

    ``check_round`` flags any index written by two workers, or written by one
    worker and read by another, within the same round.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._events: list[tuple[int, str, str, int]] = []
        self.rounds_checked = 0
        self.violations: list[str] = []

    def record(self, worker: int, kind: str, space: str, index: int) -> None:
        with self._lock:
            self._events.append((worker, kind, space, index))

    def round_write_sets(self) -> dict[int, set[tuple[str, int]]]:
        out: dict[int, set] = defaultdict(set)
        for w, kind, space, idx in self._events:
            if kind == "w":
                out[w].add((space, idx))
        return dict(out)

    def check_round(self) -> list[str]:
        writers: dict[tuple[str, int], set[int]] = defaultdict(set)
        readers: dict[tuple[str, int], set[int]] = defaultdict(set)
        for w, kind, space, idx in self._events:
            (writers if kind == "w" else readers)[(space, idx)].add(w)
        problems = []
        for key, ws in writers.items():
            if len(ws) > 1:
                problems.append(f"{key} written by workers {sorted(ws)}")
            others = readers.get(key, set()) - ws
            if others:
                problems.append(f"{key} written by {sorted(ws)} and read by {sorted(others)}")
        self._events = []
        self.rounds_checked += 1
        self.violations.extend(problems)
        return problems


def _spawn_threads(jobs: list[Callable[[], None]]) -> tuple[list[threading.Thread], float]:
    t0 = time.perf_counter()
    threads = [threading.Thread(target=job, daemon=True) for job in jobs]
    for t in threads:
        t.start()
    return threads, time.perf_counter() - t0


class ParallelDetWoOram(DetWoOram):
    """DetWoORAM whose per-write refresh loop runs on ``threads`` workers.

    Workers are started fresh for every write, as in a pthread-per-access
    implementation; ``spawn_time`` accumulates the measured start-up cost and
    ``access_time`` the total wall time spent in :meth:`write`.
    """

    def __init__(self, cfg: OramConfig, keys: SealKeys | None = None,
                 store: BackingStore | None = None, clock: VirtualClock | None = None,
                 check_holding: bool = False, threads: int | None = None, audit: bool = False,
                 spawn: Callable | None = None):
        super().__init__(cfg, keys, store, clock, check_holding)
        k = cfg.ratio
        self.threads = threads if threads is not None else max(1, -(-k.numerator // k.denominator))
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        self.recorder = AccessRecorder() if audit else None
        self._spawn = spawn or _spawn_threads
        self.spawn_time = 0.0
        self.access_time = 0.0
        self.virtual_spawn_time = 0.0

    def _refresh_job(self, worker: int, work: list[tuple[int, bytes]], errors: list):
        rec = self.recorder
        pos = self.state.pos

        def job():
            try:
                for i, nonce in work:
                    src = pos[i]
                    if rec is not None:
                        rec.record(worker, "r", "pos", i)
                        rec.record(worker, "r", "slot", src)
                    plain = unseal(self.store.read(src), src, self.keys)
                    self.store.write(i, seal(plain, i, self.keys, nonce))
                    pos[i] = i
                    if rec is not None:
                        rec.record(worker, "w", "slot", i)
                        rec.record(worker, "w", "pos", i)
            except BaseException as exc:  # surfaced after the barrier
                errors.append(exc)

        return job

    def write(self, a: int, d: bytes, threads: int | None = None) -> None:
        self._guard()
        self._check_addr(a)
        self._check_page(d)
        t_start = time.perf_counter()
        cfg, state = self.cfg, self.state
        T = threads if threads is not None else self.threads
        p = state.p

        # phase 1, serial: holding write and nonce assignment
        h = holding_slot(p, cfg)
        if self.check_holding:
            self._assert_holding_free(h)
        self._seal_to(h, d, next_nonce(state))
        state.pos[a] = h
        start, count = refresh_range(p, cfg)
        nonces = take_nonces(state, count)
        part = partition(count, T)

        # phase 2, parallel refresh
        errors: list[BaseException] = []
        jobs = []
        for w, ordinals in enumerate(part.assignments):
            if ordinals:
                work = [((start + q) % cfg.main_count, nonces[q]) for q in ordinals]
                jobs.append(self._refresh_job(w, work, errors))
        if len(jobs) == 1:
            jobs[0]()
        elif jobs:
            workers, spawn_dt = self._spawn(jobs)
            self.spawn_time += spawn_dt
            for t in workers:
                t.join()
        if self.clock is not None:
            m = self.clock.model
            spawned = len(jobs) if len(jobs) > 1 else 0
            self.virtual_spawn_time += spawned * m.spawn
            self.clock.advance(spawned * m.spawn + max(part.loads, default=0) * m.refresh)

        # phase 3, after the barrier
        if errors:
            for exc in errors:
                if isinstance(exc, IntegrityError):
                    self._poison(exc)
            raise errors[0]
        if self.recorder is not None:
            problems = self.recorder.check_round()
            if problems:
                raise InvariantError(f"round {p}: " + "; ".join(problems))
        state.p = p + 1
        self.access_time += time.perf_counter() - t_start
