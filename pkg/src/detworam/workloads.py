"""Logical page-access streams fed to the pager."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import ConfigError


@dataclass(frozen=True)
class WorkloadSpec:
    name: str
    pages: int
    ops: tuple[tuple[str, int], ...]
    zero_fill: bool = False

    def __len__(self):
        return len(self.ops)

    def write_count(self) -> int:
        return sum(1 for k, _ in self.ops if k == "w")

    def page_data(self, op_index: int, page_size: int) -> bytes:
        """Contents written by op ``op_index``; distinct per op unless zero-filled."""
        if self.zero_fill:
            return bytes(page_size)
        word = (op_index + 1).to_bytes(8, "little")
        return word * (page_size // 8)


def random_writes(ops: int = 10_000, pages: int = 1000, seed: int = 0) -> WorkloadSpec:
    """Writes at uniformly random indices of a ``pages``-long page array."""
    rng = random.Random(seed)
    return WorkloadSpec("random_writes", pages, tuple(("w", rng.randrange(pages)) for _ in range(ops)))


def random_mixed(ops: int, pages: int, seed: int = 0, write_fraction: float = 0.5) -> WorkloadSpec:
    rng = random.Random(seed)
    stream = tuple(("w" if rng.random() < write_fraction else "r", rng.randrange(pages))
                   for _ in range(ops))
    return WorkloadSpec("random_mixed", pages, stream)


def sequential_scan(pages: int, passes: int = 2, kind: str = "r") -> WorkloadSpec:
    return WorkloadSpec("sequential_scan", pages,
                        tuple((kind, v) for _ in range(passes) for v in range(pages)))


# Page writes of the secret-dependent branch program, by secret value.
_BRANCH_SECRET = {
    0: (1,),
    1: (0, 1, 2, 0, 3),
    2: (0, 2, 1, 0, 3),
}


def branch_secret(secret: int) -> WorkloadSpec:
    if secret not in _BRANCH_SECRET:
        raise ConfigError(f"secret must be 0, 1 or 2, got {secret}")
    return WorkloadSpec(f"branch_secret[{secret}]", 4,
                        tuple(("w", v) for v in _BRANCH_SECRET[secret]), zero_fill=True)


def trace_replay(source: str | Path | Iterable[str], name: str = "trace_replay",
                 pages: int | None = None) -> WorkloadSpec:
    """Replay JSON lines of the form ``{"op": "r"|"w", "page": int}``."""
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = list(source)
    ops = []
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            op, page = rec["op"], int(rec["page"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"trace line {n}: {exc}") from exc
        if op not in ("r", "w") or page < 0:
            raise ConfigError(f"trace line {n}: bad record {rec!r}")
        ops.append((op, page))
    if pages is None:
        pages = max((p for _, p in ops), default=0) + 1
    return WorkloadSpec(name, pages, tuple(ops))


def make_workload(desc: dict) -> WorkloadSpec:
    """Build a workload from a config entry such as ``{"name": "random_writes", "ops": 500}``."""
    desc = dict(desc)
    kind = desc.pop("name", None)
    builders = {
        "random_writes": random_writes,
        "random_mixed": random_mixed,
        "sequential_scan": sequential_scan,
        "branch_secret": branch_secret,
        "trace_replay": trace_replay,
    }
    if kind not in builders:
        raise ConfigError(f"unknown workload {kind!r}; choose from {sorted(builders)}")
    try:
        return builders[kind](**desc)
    except TypeError as exc:
        raise ConfigError(f"workload {kind}: {exc}") from exc
