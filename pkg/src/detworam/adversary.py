"""The malicious-OS observer.

The observer sees only writes to the untrusted store: either the ordered
sequence of written slot indices, or the set of slots whose contents changed
between snapshots taken at eviction boundaries.  Reads are invisible.  All
verdicts are computed from an :class:`ObserverView` alone, without keys,
position map or read events.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Callable

from .errors import UnequalWriteCounts
from .geometry import OramConfig, expected_writes
from .pager import PagerConfig, run_workload
from .store import BackingStore, diff
from .workloads import WorkloadSpec

PER_WRITE = "per-write"
PER_ROUND = "per-round-snapshot"


@dataclass(frozen=True)
class ObserverView:
    mode: str
    epochs: tuple

    def write_count(self) -> int:
        if self.mode == PER_WRITE:
            return len(self.epochs)
        return sum(len(e) for e in self.epochs)


@dataclass(frozen=True)
class Verdict:
    test: str
    backend: str
    verdict: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "indistinguishable")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self))


def observe(store: BackingStore, mode: str = PER_WRITE, since: int = 0) -> ObserverView:
    """Project the store's history onto what the OS can see.

    ``per-write`` takes write events from trace position ``since``.
    ``per-round-snapshot`` diffs consecutive snapshots in ``store.epochs``.
    """
    if mode == PER_WRITE:
        return ObserverView(mode, tuple(store.trace.write_indices(since)))
    if mode == PER_ROUND:
        snaps = store.epochs
        return ObserverView(mode, tuple(frozenset(diff(a, b)) for a, b in zip(snaps, snaps[1:])))
    raise ValueError(f"unknown observation mode {mode!r}")


def check_expected(view: ObserverView, cfg: OramConfig, p0: int = 0, ordered: bool = True,
                   backend: str = "") -> Verdict:
    """Pass iff round ``r`` of the view equals the writes predicted for ``p0 + r``.

    For a per-write view, ``ordered=False`` compares each round's chunk as a
    set (the guarantee the parallel variant gives).
    """
    test = "check_expected"
    if view.mode == PER_ROUND:
        for r, epoch in enumerate(view.epochs):
            want = frozenset(expected_writes(p0 + r, cfg))
            if epoch != want:
                return Verdict(test, backend, "fail",
                               f"round {r}: saw {sorted(epoch)}, expected {sorted(want)}")
        return Verdict(test, backend, "pass", f"{len(view.epochs)} rounds")
    seq = view.epochs
    off, r = 0, 0
    while off < len(seq):
        want = expected_writes(p0 + r, cfg)
        got = list(seq[off:off + len(want)])
        same = got == want if ordered else (len(got) == len(want) and set(got) == set(want))
        if not same:
            return Verdict(test, backend, "fail", f"round {r}: saw {got}, expected {want}")
        off += len(want)
        r += 1
    return Verdict(test, backend, "pass", f"{r} rounds, {len(seq)} writes")


def distinguishable(a: ObserverView, b: ObserverView) -> bool:
    return a.mode != b.mode or a.epochs != b.epochs


def leak_test(make_workload: Callable[[int], WorkloadSpec], secrets: tuple[int, int],
              cfg: PagerConfig, fault_budget: int | None = None) -> Verdict:
    """Run one workload per secret and ask whether the OS can tell them apart.

    Write-only ORAM hides where writes go, not how many there are, so the two
    runs must evict the same number of pages.
    """
    cfg = dataclasses.replace(cfg, snapshot_rounds=True)
    views, evictions = [], []
    for s in secrets:
        res = run_workload(make_workload(s), cfg, fault_budget)
        views.append(observe(res.store, PER_ROUND))
        evictions.append(res.metrics.evictions)
        res.store.close()
    if evictions[0] != evictions[1]:
        raise UnequalWriteCounts(f"secrets {secrets} evict {evictions[0]} vs {evictions[1]} pages")
    if distinguishable(*views):
        detail = next(f"round {r}: {sorted(x)} vs {sorted(y)}"
                      for r, (x, y) in enumerate(zip(*(v.epochs for v in views))) if x != y)
        return Verdict("leak_test", cfg.backend, "distinguishable", detail)
    return Verdict("leak_test", cfg.backend, "indistinguishable",
                   f"{evictions[0]} evictions, identical views")
