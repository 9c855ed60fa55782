import json

import pytest

from detworam import OutOfMemory, Pager, PagerConfig, run_workload
from detworam.errors import ConfigError
from detworam.workloads import (branch_secret, make_workload, random_mixed, random_writes,
                                sequential_scan, trace_replay)

PAGE = 64
BACKENDS = ["noram", "det", "eager", "parallel"]


def cfg(backend="det", **kw):
    kw.setdefault("page_size", PAGE)
    kw.setdefault("seed", 7)
    return PagerConfig(backend=backend, **kw)


def test_defaults_match_reference_setup():
    c = PagerConfig()
    assert c.resident_limit == 15 and c.page_size == 4096


def test_fill_then_fifo_eviction():
    p = Pager(cfg(resident_limit=3, k=3), pages=12)
    for v in range(3):
        p.access(v)
    assert (p.metrics.faults, p.metrics.evictions) == (3, 0)
    mark = len(p.store.trace)
    p.access(3)
    assert p.metrics.faults == 4 and p.evicted == [0]
    assert not p.resident(0) and p.resident(3)
    # one K=3 ORAM write: four slot writes
    assert len(p.store.trace.write_indices(mark)) == 4


def test_out_of_memory():
    p = Pager(cfg(k=3), pages=12)
    with pytest.raises(OutOfMemory):
        p.access(12)


def test_write_access_needs_full_page():
    p = Pager(cfg(), pages=12)
    with pytest.raises(ValueError):
        p.access(0, "w", b"x")


def test_run_is_deterministic():
    spec = random_writes(ops=2000, pages=100, seed=4)
    a = run_workload(spec, cfg(resident_limit=15))
    b = run_workload(spec, cfg(resident_limit=15))
    assert a.trace.events == b.trace.events
    assert a.metrics.faults == b.metrics.faults


def test_sequential_scan_faults_only_first_pass():
    spec = sequential_scan(15, passes=4)
    res = run_workload(spec, cfg(resident_limit=15))
    assert res.metrics.faults == 15 and res.metrics.evictions == 0
    assert res.metrics.hits == 45


def test_fault_budget_exact():
    res = run_workload(random_writes(ops=5000, pages=200, seed=1), cfg(), fault_budget=100)
    assert res.metrics.faults == 100
    short = run_workload(sequential_scan(10, 1), cfg(), fault_budget=100)
    assert short.metrics.faults == 10


@pytest.mark.parametrize("backend", BACKENDS)
def test_functional_fidelity(backend):
    spec = random_mixed(3000, 60, seed=2, write_fraction=0.6)
    p = Pager(cfg(backend, resident_limit=5, k=3), spec.pages)
    ref = [bytes(PAGE)] * spec.pages
    for n, (kind, v) in enumerate(spec.ops):
        if kind == "w":
            d = spec.page_data(n, PAGE)
            p.access(v, "w", d)
            ref[v] = d
        else:
            assert p.access(v) == ref[v]
    p.finish()
    p.close()


def test_backends_page_identically():
    spec = random_mixed(1500, 50, seed=9)
    decisions = []
    for b in BACKENDS:
        r = run_workload(spec, cfg(b, resident_limit=7))
        decisions.append((r.evicted, r.metrics.faults, r.metrics.hits))
    assert all(d == decisions[0] for d in decisions)


@pytest.mark.parametrize("backend,k", [("noram", 3), ("det", 3), ("det", 7), ("eager", 3),
                                       ("parallel", 7)])
def test_amplification_accounting(backend, k):
    res = run_workload(random_writes(1000, 80, seed=3), cfg(backend, k=k, resident_limit=10))
    m = res.metrics
    per = 1 if backend == "noram" else k + 1
    assert m.slot_writes == m.evictions * per
    assert m.evictions <= m.faults


def test_branch_secret_streams():
    assert [v for _, v in branch_secret(1).ops] == [0, 1, 2, 0, 3]
    assert [v for _, v in branch_secret(2).ops] == [0, 2, 1, 0, 3]
    assert [v for _, v in branch_secret(0).ops] == [1]
    assert all(k == "w" for k, _ in branch_secret(1).ops)
    with pytest.raises(ConfigError):
        branch_secret(3)


def test_trace_replay(tmp_path):
    path = tmp_path / "w.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in
                              [{"op": "w", "page": 3}, {"op": "r", "page": 0}, {"op": "r", "page": 3}]))
    spec = trace_replay(path)
    assert spec.ops == (("w", 3), ("r", 0), ("r", 3)) and spec.pages == 4
    with pytest.raises(ConfigError):
        trace_replay(['{"op": "x", "page": 1}'])
    with pytest.raises(ConfigError):
        trace_replay(["not json"])


def test_make_workload():
    assert make_workload({"name": "random_writes", "ops": 10, "pages": 5}).pages == 5
    with pytest.raises(ConfigError):
        make_workload({"name": "nope"})
    with pytest.raises(ConfigError):
        make_workload({"name": "random_writes", "bogus": 1})


def test_file_backed_pager(tmp_path):
    c = cfg("det", store_path=str(tmp_path / "utm.bin"), resident_limit=4)
    res = run_workload(random_writes(300, 30, seed=5), c)
    assert res.store.backend == "file"
    assert res.metrics.slot_writes == 4 * res.metrics.evictions
    res.store.close()


def test_bad_config():
    with pytest.raises(ConfigError):
        PagerConfig(backend="pathoram")
    with pytest.raises(ConfigError):
        PagerConfig(resident_limit=0)
    with pytest.raises(ConfigError):
        PagerConfig(main_count=12)
