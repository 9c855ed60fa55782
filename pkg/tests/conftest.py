import math
from fractions import Fraction

import pytest

from detworam import SealKeys


def page(tag: int, size: int = 64) -> bytes:
    """A page filled with a recognisable pattern."""
    return tag.to_bytes(8, "little") * (size // 8)


class CursorModel:
    """Independent reference for the write schedule.

    Walks explicit holding/main cursors forward the way a pointer-based
    implementation would, instead of recomputing positions from the write
    counter.  Per-write main advance comes from Fraction floors.
    """

    def __init__(self, n: int, m: int):
        self.n, self.m = n, m
        self.k = Fraction(n, m)
        self.cur_h = 0
        self.cur_m = 0
        self.p = 0

    def step(self) -> list[int]:
        count = math.floor((self.p + 1) * self.k) - math.floor(self.p * self.k)
        out = [self.n + self.cur_h] + [(self.cur_m + q) % self.n for q in range(count)]
        self.cur_h += 1
        if self.cur_h >= self.m:
            self.cur_h = 0
        self.cur_m += count
        while self.cur_m >= self.n:
            self.cur_m -= self.n
        self.p += 1
        return out


class ShadowOram:
    """Plain position-map simulation without crypto, used as a state oracle."""

    def __init__(self, n: int, m: int):
        self.model = CursorModel(n, m)
        self.n = n
        self.mem = {i: bytes(1) for i in range(n + m)}
        self.pos = list(range(n))

    def write(self, a, d):
        writes = self.model.step()
        h, refresh = writes[0], writes[1:]
        self.mem[h] = d
        self.pos[a] = h
        for i in refresh:
            self.mem[i] = self.mem[self.pos[i]]
            self.pos[i] = i
        return writes


@pytest.fixture
def keys():
    return SealKeys.derive(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record and print one pass/fail line for an acceptance criterion."""

    def report(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
