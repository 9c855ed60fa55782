"""Benchmark matrix: workloads x backends x K x threads against a no-ORAM baseline.

Each workload first runs on the baseline (optionally capped by a fault
budget); every other cell is then replayed for exactly the baseline's number
of page faults, with the same seed.  Slowdown is the ratio of total run time
to the baseline's under the selected clock.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .analysis import REFERENCE_SPAWN_SHARE, report_thread_overhead
from .costs import CostModel
from .errors import ConfigError
from .pager import BACKENDS, PagerConfig, RunResult, run_workload
from .workloads import WorkloadSpec, make_workload

log = logging.getLogger(__name__)

COLUMNS = (
    "workload", "backend", "K", "threads", "faults", "evictions", "slot_reads",
    "slot_writes", "virtual_time", "wall_time", "per_fault_time", "oram_time",
    "spawn_time", "slowdown_vs_baseline",
)
# Columns that depend on the host machine rather than the virtual clock.
MACHINE_DEPENDENT = ("wall_time",)

DEFAULT_CONFIG: dict[str, Any] = {
    "workloads": [{"name": "random_writes", "ops": 10_000, "pages": 1000}],
    "backends": list(BACKENDS),
    "K": [3, 7, 15],
    "threads": None,
    "fault_budget": 2000,
    "seed": 1,
    "page_size": 4096,
    "resident_limit": 15,
    "clock": "virtual",
    "cost": {},
    "traces": True,
}

_SEEDED = ("random_writes", "random_mixed")


@dataclass
class BenchReport:
    config: dict
    rows: list[dict] = field(default_factory=list)

    @property
    def clock(self) -> str:
        return self.config["clock"]

    def thread_overhead(self) -> dict[int, float]:
        return report_thread_overhead(self.rows)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "machine_dependent_columns": list(MACHINE_DEPENDENT),
            "rows": self.rows,
            "thread_overhead_pct": {str(k): v for k, v in self.thread_overhead().items()},
            "reference_thread_overhead_pct": {str(k): v for k, v in REFERENCE_SPAWN_SHARE.items()},
        }


def load_config(source: str | Path | dict | None = None, **overrides) -> dict:
    if source is None:
        raw: dict = {}
    elif isinstance(source, dict):
        raw = dict(source)
    else:
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = {**DEFAULT_CONFIG, **raw}
    cfg.update({k: v for k, v in overrides.items() if v is not None})

    if cfg["clock"] not in ("virtual", "wall"):
        raise ConfigError(f"clock must be 'virtual' or 'wall', got {cfg['clock']!r}")
    bad = [b for b in cfg["backends"] if b not in BACKENDS]
    if bad or not cfg["backends"]:
        raise ConfigError(f"bad backends {bad}; choose from {BACKENDS}")
    if not cfg["K"] or any(not isinstance(k, int) or k < 1 for k in cfg["K"]):
        raise ConfigError(f"K values must be positive integers, got {cfg['K']}")
    if isinstance(cfg["threads"], int):
        cfg["threads"] = [cfg["threads"]]
    if cfg["threads"] is not None and any(t < 1 for t in cfg["threads"]):
        raise ConfigError("thread counts must be >= 1")
    if cfg["fault_budget"] is not None and cfg["fault_budget"] < 1:
        raise ConfigError("fault_budget must be positive")
    try:
        CostModel(**cfg["cost"])
    except TypeError as exc:
        raise ConfigError(f"cost: {exc}") from exc
    if not cfg["workloads"]:
        raise ConfigError("no workloads configured")
    return cfg


def _workload(desc: dict, seed: int) -> WorkloadSpec:
    desc = dict(desc)
    if desc.get("name") in _SEEDED:
        desc.setdefault("seed", seed)
    return make_workload(desc)


def _cells(cfg: dict) -> list[tuple[str, int, int | None]]:
    cells = []
    for backend in cfg["backends"]:
        if backend == "noram":
            continue
        for k in cfg["K"]:
            if backend == "parallel":
                for t in (cfg["threads"] or [k]):
                    cells.append((backend, k, t))
            else:
                cells.append((backend, k, None))
    return cells


def _pager_config(cfg: dict, backend: str, k: int, threads: int | None) -> PagerConfig:
    return PagerConfig(
        resident_limit=cfg["resident_limit"], page_size=cfg["page_size"], backend=backend,
        k=k, threads=threads, seed=cfg["seed"], cost=CostModel(**cfg["cost"]),
    )


def _row(spec: WorkloadSpec, backend: str, k, threads, res: RunResult, clock: str) -> dict:
    m = res.metrics
    virtual = clock == "virtual"
    return {
        "workload": spec.name,
        "backend": backend,
        "K": k,
        "threads": threads,
        "faults": m.faults,
        "evictions": m.evictions,
        "slot_reads": m.slot_reads,
        "slot_writes": m.slot_writes,
        "virtual_time": m.virtual_time,
        "wall_time": m.wall_time,
        "per_fault_time": m.per_fault(clock),
        "oram_time": m.oram_virtual if virtual else m.oram_wall,
        "spawn_time": m.spawn_virtual if virtual else m.spawn_wall,
        "slowdown_vs_baseline": None,
    }


def _dump_trace(out: Path, name: str, res: RunResult) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{name}.jsonl", "w") as fp:
        res.trace.dump_jsonl(fp, res.trace_start)


def run_matrix(config: str | Path | dict | None = None, out_dir: str | Path | None = None,
               seed: int | None = None, threads: int | None = None, clock: str | None = None,
               parallel_cells: bool = False) -> BenchReport:
    cfg = load_config(config, seed=seed, threads=threads, clock=clock)
    report = BenchReport(cfg)
    trace_dir = Path(out_dir) / "traces" if (out_dir is not None and cfg["traces"]) else None
    total_key = "virtual_time" if cfg["clock"] == "virtual" else "wall_time"

    for desc in cfg["workloads"]:
        spec = _workload(desc, cfg["seed"])
        log.info("workload %s: %d ops over %d pages", spec.name, len(spec), spec.pages)
        base = run_workload(spec, _pager_config(cfg, "noram", cfg["K"][0], None), cfg["fault_budget"])
        base.store.close()
        budget = base.metrics.faults
        rows = []
        if "noram" in cfg["backends"]:
            rows.append(_row(spec, "noram", None, None, base, cfg["clock"]))
        if trace_dir is not None:
            _dump_trace(trace_dir, f"{spec.name}_noram", base)

        def run_cell(cell):
            backend, k, t = cell
            res = run_workload(spec, _pager_config(cfg, backend, k, t), budget)
            res.store.close()
            if trace_dir is not None:
                _dump_trace(trace_dir, f"{spec.name}_{backend}_K{k}" + (f"_T{t}" if t else ""), res)
            log.info("%s K=%s T=%s: %d faults", backend, k, t, res.metrics.faults)
            return _row(spec, backend, k, t, res, cfg["clock"])

        cells = _cells(cfg)
        if parallel_cells:
            with ThreadPoolExecutor() as pool:
                rows.extend(pool.map(run_cell, cells))
        else:
            rows.extend(run_cell(c) for c in cells)

        base_total = base.metrics.virtual_time if cfg["clock"] == "virtual" else base.metrics.wall_time
        for row in rows:
            row["slowdown_vs_baseline"] = row[total_key] / base_total if base_total else None
        report.rows.extend(rows)

    if out_dir is not None:
        write_reports(report, out_dir)
    return report


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def write_csv(report: BenchReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        w.writerow(COLUMNS)
        for row in report.rows:
            w.writerow([_fmt(row[c]) for c in COLUMNS])


def write_reports(report: BenchReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(report, out / "report.csv")
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=2))
