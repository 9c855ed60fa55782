"""Timing formulas used to project the eager and parallel variants.

``simulate_parallel_time`` rescales the share of run time spent inside the
ORAM by a measured speedup ``c``.  ``simulate_eager_time`` removes, for each
eviction interval, whatever part of the refresh fits into the idle gap before
it.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Mapping, Sequence

from .errors import DomainError

# Thread start-up share of parallel ORAM access time reported for the
# enclave prototype (K = 3, 7, 15).  Comparison points only.
REFERENCE_SPAWN_SHARE = {3: 2.10, 7: 4.49, 15: 6.36}


def simulate_parallel_time(total: float, oram_time: float, speedup: float) -> float:
    if speedup <= 0:
        raise DomainError(f"speedup must be positive, got {speedup}")
    if not 0 <= oram_time <= total:
        raise DomainError(f"need 0 <= oram_time <= total, got {oram_time}, {total}")
    return total - oram_time + oram_time / speedup


def simulate_eager_time(total: float, gaps: Sequence[float], refreshes: Sequence[float]) -> float:
    if len(gaps) != len(refreshes):
        raise DomainError(f"{len(gaps)} gaps but {len(refreshes)} refresh times")
    if any(g < 0 for g in gaps) or any(r < 0 for r in refreshes):
        raise DomainError("gaps and refresh times must be non-negative")
    discount = sum(min(g, r) for g, r in zip(gaps, refreshes))
    if discount > total:
        raise DomainError(f"discount {discount} exceeds total {total}")
    return total - discount


def report_thread_overhead(rows: Iterable[Mapping]) -> dict[int, float]:
    """Spawn time as a percentage of parallel ORAM access time, per K.

    Machine dependent under the wall clock; reported, never asserted.
    """
    spawn: dict[int, float] = defaultdict(float)
    access: dict[int, float] = defaultdict(float)
    for row in rows:
        if row.get("backend") != "parallel":
            continue
        k = int(row["K"])
        spawn[k] += float(row["spawn_time"])
        access[k] += float(row["oram_time"])
    return {k: (100.0 * spawn[k] / access[k] if access[k] else 0.0) for k in sorted(access)}
