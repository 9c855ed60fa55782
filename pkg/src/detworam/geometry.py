"""Layout arithmetic for a deterministic write-only ORAM.

The store is ``N + M`` slots: a main area ``[0, N)`` where block ``a`` has its
home at slot ``a``, followed by a holding area ``[N, N + M)`` that receives
every fresh write.  The ratio ``K = N / M`` is kept as an exact fraction; all
floors are computed in integer arithmetic.

Nothing here depends on a logical address.  The physical slots touched by the
``p``-th write are a function of ``p`` and the geometry alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .errors import GeometryError

NONCE_SIZE = 12
MAC_SIZE = 32


@dataclass(frozen=True)
class OramConfig:
    main_count: int
    holding_count: int
    page_size: int = 4096
    ratio: Fraction = field(init=False)

    def __post_init__(self):
        n, m, size = self.main_count, self.holding_count, self.page_size
        for name, v in (("main_count", n), ("holding_count", m), ("page_size", size)):
            if not isinstance(v, int) or isinstance(v, bool):
                raise GeometryError(f"{name} must be an int, got {v!r}")
        if m < 1:
            raise GeometryError(f"holding area needs at least one slot (M={m})")
        if n < m:
            raise GeometryError(f"main area smaller than holding area: N={n} < M={m}")
        if size < 16 or size % 16:
            raise GeometryError(f"page_size must be a positive multiple of 16, got {size}")
        object.__setattr__(self, "ratio", Fraction(n, m))

    @property
    def N(self) -> int:
        return self.main_count

    @property
    def M(self) -> int:
        return self.holding_count

    @property
    def K(self) -> Fraction:
        return self.ratio

    @property
    def total_slots(self) -> int:
        return self.main_count + self.holding_count

    @property
    def slot_size(self) -> int:
        return NONCE_SIZE + self.page_size + MAC_SIZE

    @classmethod
    def for_pages(cls, pages: int, k: int, page_size: int = 4096) -> "OramConfig":
        """Smallest integer-K geometry whose main area holds ``pages`` blocks."""
        if pages < 1 or k < 1:
            raise GeometryError(f"need pages >= 1 and K >= 1, got pages={pages}, K={k}")
        m = -(-pages // k)
        return cls(k * m, m, page_size)

    @classmethod
    def for_store_bytes(cls, store_bytes: int, k: int, page_size: int = 4096) -> "OramConfig":
        """Split a fixed-size store (e.g. a 64 MiB shared region) into K:1 areas."""
        slots = store_bytes // page_size
        m = slots // (k + 1)
        if m < 1:
            raise GeometryError(f"{store_bytes} bytes cannot hold a K={k} layout")
        return cls(k * m, m, page_size)


def new_config(n: int, m: int, page_size: int = 4096) -> OramConfig:
    return OramConfig(n, m, page_size)


def scaled_floor(p: int, cfg: OramConfig) -> int:
    """floor(p * K), exact."""
    return (p * cfg.main_count) // cfg.holding_count


def holding_slot(p: int, cfg: OramConfig) -> int:
    return cfg.main_count + (p % cfg.holding_count)


def refresh_range(p: int, cfg: OramConfig) -> tuple[int, int]:
    """Return ``(start, count)`` of the main slots refreshed by write ``p``.

    The refreshed indices are ``start, start + 1, ...`` taken modulo N.  The
    count form is used because the exclusive end ``floor((p+1)K) mod N`` may
    wrap to a value <= start.
    """
    lo = scaled_floor(p, cfg)
    hi = scaled_floor(p + 1, cfg)
    return lo % cfg.main_count, hi - lo


def refresh_indices(p: int, cfg: OramConfig) -> list[int]:
    start, count = refresh_range(p, cfg)
    n = cfg.main_count
    return [(start + q) % n for q in range(count)]


def expected_writes(p: int, cfg: OramConfig) -> list[int]:
    """Canonical slot-write order for write ``p``: holding slot, then refreshes."""
    return [holding_slot(p, cfg)] + refresh_indices(p, cfg)


def expected_write_set(p: int, cfg: OramConfig) -> frozenset[int]:
    return frozenset(expected_writes(p, cfg))


def iter_expected_writes(p0: int, rounds: int, cfg: OramConfig) -> Iterator[int]:
    for p in range(p0, p0 + rounds):
        yield from expected_writes(p, cfg)


def check_position_map(pos: list[int], cfg: OramConfig) -> None:
    """Raise GeometryError unless every entry is its own main slot or a holding slot."""
    if len(pos) != cfg.main_count:
        raise GeometryError(f"position map has {len(pos)} entries, expected {cfg.main_count}")
    n, total = cfg.main_count, cfg.total_slots
    for a, s in enumerate(pos):
        if s != a and not (n <= s < total):
            raise GeometryError(f"pos[{a}] = {s} is neither {a} nor a holding slot")


@dataclass
class OramState:
    """Trusted-side metadata of one ORAM instance.

    The holding and main cursors are not stored; both follow from ``p``.
    """

    pos: list[int]
    p: int = 0
    nonce_counter: int = 0

    @classmethod
    def fresh(cls, cfg: OramConfig) -> "OramState":
        return cls(pos=list(range(cfg.main_count)))

    def cur_holding(self, cfg: OramConfig) -> int:
        return holding_slot(self.p, cfg)

    def cur_main(self, cfg: OramConfig) -> int:
        return scaled_floor(self.p, cfg) % cfg.main_count
