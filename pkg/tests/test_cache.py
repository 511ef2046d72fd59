import random

import pytest
from hypothesis import given, strategies as st

from specwindow.cache import CacheState, access, flush_line, line_index, probe_latency
from specwindow.config import CacheGeometry, ModelConfig
from specwindow.errors import ConfigError

from lru_oracle import NaiveLRU

G = CacheGeometry()


def test_line_index_zero():
    assert line_index(0, G) == (0, 0)


def test_line_index_next_line():
    assert line_index(G.line_size, G) == (1, 0)


@given(st.integers(0, 1 << 32), st.sampled_from([4, 16, 64, 128]), st.sampled_from([1, 2, 128]))
def test_line_index_oracle(addr, line, sets):
    g = CacheGeometry(line_size=line, num_sets=sets, ways=2)
    s, t = line_index(addr, g)
    # shift/mask formulation
    lb, sb = line.bit_length() - 1, sets.bit_length() - 1
    assert (s, t) == ((addr >> lb) & (sets - 1), addr >> (lb + sb))


def test_empty_cache_misses():
    _, hit = access(CacheState(G), 0x1234)
    assert not hit


def test_repeat_access_hits():
    c, _ = access(CacheState(G), 0x1234)
    _, hit = access(c, 0x1234)
    assert hit


def test_lru_eviction_two_ways():
    g = CacheGeometry(ways=2)
    stride = g.line_size * g.num_sets
    x, y, z = 0, stride, 2 * stride
    c = CacheState(g)
    for a in (x, y, z):
        c, _ = access(c, a)
    c, hit = access(c, x)
    assert not hit


def test_access_is_functional():
    c0 = CacheState(G)
    access(c0, 64)
    assert c0.resident() == []


def test_flush_empty():
    assert flush_line(CacheState(G), 0x40) == CacheState(G)


def test_flush_then_miss():
    c, _ = access(CacheState(G), 0x40)
    c = flush_line(c, 0x40)
    _, hit = access(c, 0x40)
    assert not hit


def test_flush_keeps_set_neighbour():
    stride = G.line_size * G.num_sets
    c, _ = access(CacheState(G), 0x40)
    c, _ = access(c, 0x40 + stride)
    c = flush_line(c, 0x40)
    assert c.contains(0x40 + stride) and not c.contains(0x40)


def test_probe_latencies():
    cfg = ModelConfig()
    c, lat = probe_latency(CacheState(G), 0x80, cfg)
    assert lat == cfg.miss_latency
    c, lat = probe_latency(c, 0x80, cfg)
    assert lat == cfg.hit_latency


def test_probe_exactly_one_hot_line():
    cfg = ModelConfig()
    base = 0x4000
    c, _ = access(CacheState(G), base + 0x2A * G.line_size)
    lats = []
    for i in range(256):
        c, lat = probe_latency(c, base + i * G.line_size, cfg)
        lats.append(lat)
    assert lats.count(cfg.hit_latency) == 1 and lats.index(cfg.hit_latency) == 0x2A
    assert set(lats) == {cfg.hit_latency, cfg.miss_latency}


@pytest.mark.parametrize("kw", [dict(line_size=48), dict(num_sets=3), dict(line_size=2),
                                dict(ways=0)])
def test_bad_geometry(kw):
    with pytest.raises(ConfigError):
        CacheGeometry(**kw)


@pytest.mark.parametrize("kw", [dict(hit_latency=40), dict(threshold=2), dict(threshold=41)])
def test_latency_separation_enforced(kw):
    with pytest.raises(ConfigError):
        ModelConfig(**kw)


def _random_ops(rng, n, span):
    return [(rng.random() < 0.2, rng.randrange(0, span)) for _ in range(n)]


def test_oracle_equivalence_many_sequences():
    rng = random.Random(1234)
    geoms = [CacheGeometry(64, 4, 2), CacheGeometry(16, 8, 4), CacheGeometry(64, 128, 4),
             CacheGeometry(32, 1, 3)]
    for i in range(10_000):
        g = geoms[i % len(geoms)]
        ref = NaiveLRU(g.line_size, g.num_sets, g.ways)
        c = CacheState(g)
        for is_flush, addr in _random_ops(rng, rng.randrange(1, 40), g.capacity * 3):
            if is_flush:
                ref.flush(addr)
                c.flush(addr)
            else:
                assert c.touch(addr) == ref.access(addr)
        assert c.resident() == ref.resident()


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 4096)), max_size=60))
def test_functional_api_matches_oracle(ops):
    g = CacheGeometry(16, 4, 2)
    ref = NaiveLRU(16, 4, 2)
    c = CacheState(g)
    for is_flush, addr in ops:
        if is_flush:
            ref.flush(addr)
            c = flush_line(c, addr)
        else:
            c, hit = access(c, addr)
            assert hit == ref.access(addr)
    assert c.resident() == ref.resident()
