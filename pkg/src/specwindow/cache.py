"""Set-associative, LRU, write-allocate cache.

Each set is stored as a row of ``ways`` tags ordered MRU to LRU, with -1
marking an empty way. The functional operations (``access``, ``flush_line``,
``probe_latency``) never mutate their argument; ``CacheState.touch`` and
``CacheState.flush`` are the in-place variants used by the harness.
"""
from __future__ import annotations

from array import array
from typing import List, Tuple

from ._backend import kernel
from .config import CacheGeometry

EMPTY = -1


def line_index(addr: int, g: CacheGeometry) -> Tuple[int, int]:
    return (addr // g.line_size) % g.num_sets, addr // (g.line_size * g.num_sets)


class CacheState:
    __slots__ = ("geometry", "tags")

    def __init__(self, geometry: CacheGeometry = None, tags=None):
        self.geometry = geometry or CacheGeometry()
        n = self.geometry.num_sets * self.geometry.ways
        if tags is None:
            self.tags = array("q", [EMPTY]) * n
        else:
            self.tags = array("q", tags)
            if len(self.tags) != n:
                raise ValueError("tag array does not match geometry")

    def copy(self) -> "CacheState":
        return CacheState(self.geometry, self.tags)

    def __eq__(self, other):
        if not isinstance(other, CacheState):
            return NotImplemented
        return self.geometry == other.geometry and self.tags == other.tags

    def __repr__(self):
        return f"CacheState({len(self.resident())} lines resident)"

    def set_lines(self, set_idx: int) -> List[int]:
        """Tags of one set, MRU first."""
        w = self.geometry.ways
        row = self.tags[set_idx * w:(set_idx + 1) * w]
        return [t for t in row if t != EMPTY]

    def resident(self) -> List[Tuple[int, int]]:
        """Sorted (set, tag) pairs currently cached."""
        w = self.geometry.ways
        out = []
        for i, t in enumerate(self.tags):
            if t != EMPTY:
                out.append((i // w, t))
        out.sort()
        return out

    def contains(self, addr: int) -> bool:
        s, t = line_index(addr, self.geometry)
        return t in self.set_lines(s)

    def touch(self, addr: int) -> bool:
        s, t = line_index(addr, self.geometry)
        return kernel.cache_access(self.tags, s, t, self.geometry.ways)

    def flush(self, addr: int) -> bool:
        s, t = line_index(addr, self.geometry)
        return kernel.cache_flush(self.tags, s, t, self.geometry.ways)


def access(c: CacheState, addr: int) -> Tuple[CacheState, bool]:
    """Return (new state, hit?)."""
    c = c.copy()
    hit = c.touch(addr)
    return c, hit


def flush_line(c: CacheState, addr: int) -> CacheState:
    c = c.copy()
    c.flush(addr)
    return c


def probe_latency(c: CacheState, addr: int, cfg) -> Tuple[CacheState, int]:
    c, hit = access(c, addr)
    return c, cfg.hit_latency if hit else cfg.miss_latency
