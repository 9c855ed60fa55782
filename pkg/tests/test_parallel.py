import random

import pytest
from hypothesis import given, strategies as st

from detworam import DetWoOram, IntegrityError, ParallelDetWoOram, new_config, partition
from detworam.costs import CostModel, VirtualClock
from detworam.geometry import expected_write_set
from detworam.parallel import AccessRecorder

from conftest import page

PAGE = 64


def test_partition_examples():
    assert partition(3, 3).assignments == ((0,), (1,), (2,))
    assert partition(7, 3).loads == [3, 2, 2]
    assert partition(3, 1).assignments == ((0, 1, 2),)
    assert partition(0, 4).loads == [0, 0, 0, 0]


@given(st.integers(0, 200), st.integers(1, 40))
def test_partition_covers_disjointly(count, threads):
    part = partition(count, threads)
    flat = [q for a in part.assignments for q in a]
    assert sorted(flat) == list(range(count))
    assert max(part.loads) - min(part.loads) <= 1
    for j, a in enumerate(part.assignments):
        assert all(q % threads == j for q in a)


def test_round_zero_write_set_and_state(keys):
    cfg = new_config(12, 4, PAGE)
    par = ParallelDetWoOram(cfg, keys, threads=3)
    base = DetWoOram(cfg, keys)
    mark = len(par.store.trace)
    par.write(5, page(1))
    base.write(5, page(1))
    assert set(par.store.trace.write_indices(mark)) == {12, 0, 1, 2}
    assert par.pos == base.pos and par.p == base.p == 1
    assert par.read(5) == page(1)


def test_single_thread_trace_identical_to_base(keys):
    cfg = new_config(10, 4, PAGE)
    par = ParallelDetWoOram(cfg, keys, threads=1)
    base = DetWoOram(cfg, keys)
    for i in range(30):
        par.write(i % 10, page(i))
        base.write(i % 10, page(i))
    assert par.store.trace.events == base.store.trace.events
    # identical nonce order, so identical ciphertexts too
    assert par.store.snapshot() == base.store.snapshot()


@pytest.mark.parametrize("threads", [2, 3, 8])
def test_parity_with_base(keys, threads):
    cfg = new_config(24, 3, PAGE)
    par = ParallelDetWoOram(cfg, keys, threads=threads, audit=True)
    base = DetWoOram(cfg, keys)
    rng = random.Random(threads)
    for i in range(300):
        a = rng.randrange(24)
        m1, m2 = len(par.store.trace), len(base.store.trace)
        par.write(a, page(i))
        base.write(a, page(i))
        assert par.pos == base.pos and par.p == base.p
        assert set(par.store.trace.write_indices(m1)) == set(base.store.trace.write_indices(m2)) \
            == expected_write_set(i, cfg)
    assert [par.read(a) for a in range(24)] == [base.read(a) for a in range(24)]
    assert par.recorder.rounds_checked == 300 and not par.recorder.violations


def test_recorder_flags_overlaps():
    rec = AccessRecorder()
    rec.record(0, "w", "slot", 4)
    rec.record(1, "w", "slot", 4)
    rec.record(1, "r", "slot", 7)
    rec.record(2, "w", "slot", 7)
    problems = rec.check_round()
    assert len(problems) == 2
    assert rec.check_round() == []


def test_worker_integrity_error_poisons(keys):
    cfg = new_config(12, 4, PAGE)
    par = ParallelDetWoOram(cfg, keys, threads=3)
    raw = bytearray(par.store.peek(1))
    raw[-1] ^= 1
    par.store.tamper(1, bytes(raw))
    with pytest.raises(IntegrityError):
        par.write(7, page(1))
    assert par.p == 0
    with pytest.raises(IntegrityError):
        par.read(7)


def test_virtual_critical_path(keys):
    model = CostModel(spawn=0.5)
    cfg = new_config(60, 4, PAGE)       # K = 15
    clock = VirtualClock(model)
    par = ParallelDetWoOram(cfg, keys, clock=clock, threads=15)
    par.write(0, page(0))
    # holding seal + write, 15 spawns, one refresh per worker
    assert clock.now == pytest.approx(2 + 15 * 0.5 + model.refresh)
    assert par.virtual_spawn_time == pytest.approx(7.5)


def test_zero_cost_spawn_stub(keys):
    def inline(jobs):
        for job in jobs:
            job()
        return [], 0.0

    par = ParallelDetWoOram(new_config(12, 4, PAGE), keys, threads=3, spawn=inline)
    for i in range(5):
        par.write(i, page(i))
    assert par.spawn_time == 0.0
    assert par.access_time > 0
