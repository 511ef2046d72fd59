"""End-to-end Flush+Reload attack driver."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .cache import CacheState, probe_latency
from .config import ModelConfig
from .errors import ConfigError
from .gadgets import GadgetSpec
from .isa import run_seq
from .muarch import SimResult, simulate
from .predictor import PredictorState

DEFAULT_FUEL = 100_000


class LayoutError(ConfigError):
    """Gadget cannot support byte-exact recovery."""


def plant_secret(mem: bytes, g: GadgetSpec, s: int) -> bytes:
    lo, hi = g.secret_domain
    if not lo <= s <= hi:
        raise ValueError(f"secret {s} outside domain [{lo}, {hi}] of {g.name}")
    out = bytearray(mem)
    word = s.to_bytes(4, "little")
    for a in g.secret_addresses:
        out[a:a + 4] = word
    return bytes(out)


def mistrain(g: GadgetSpec, cfg: ModelConfig, pred0: PredictorState, cache0: CacheState,
             iterations: int, mem: Optional[bytes] = None,
             fuel: int = DEFAULT_FUEL) -> Tuple[PredictorState, CacheState]:
    """Run the victim ``iterations`` times over the valid inputs, in order."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    pred, cache = pred0, cache0
    inputs = g.valid_inputs
    for i in range(iterations):
        r = simulate(g.program, g.initial_state(inputs[i % len(inputs)], mem), cfg,
                     pred, cache, fuel)
        pred, cache = r.predictor, r.cache
    return pred, cache


def attacker_flush(g: GadgetSpec, cache: CacheState, line_size: int) -> CacheState:
    """Evict the monitored lines plus the manifest's extra flush targets."""
    cache = cache.copy()
    if g.monitored is not None:
        for a in g.monitored_lines(line_size):
            cache.flush(a)
    for a in g.attacker_flush:
        cache.flush(a)
    return cache


@dataclass
class AttackReport:
    gadget: str
    mode: str
    secret: int
    attacker_input: int
    latencies: List[int]
    hot_lines: List[int]
    architectural_lines: List[int]
    recovered: List[int]
    success: bool
    victim_cycles: int
    probe_cycles: int
    threshold: int
    hit_latency: int
    miss_latency: int
    arch_matches_seq: bool
    result: SimResult = field(repr=False, default=None)


def flush_reload_attack(g: GadgetSpec, s: int, cfg: ModelConfig,
                        iterations: Optional[int] = None,
                        attacker_input: Optional[int] = None,
                        fuel: int = DEFAULT_FUEL) -> AttackReport:
    if g.monitored is None:
        raise ConfigError(f"gadget {g.name!r} has no monitored region")
    if g.leak_layout != "scaled":
        raise LayoutError(f"gadget {g.name!r} lacks the scaled leak layout; "
                          f"use {g.name}-scaled for byte-exact recovery")
    if attacker_input is None:
        if not g.malicious_inputs:
            raise ConfigError(f"gadget {g.name!r} declares no malicious input")
        attacker_input = g.malicious_inputs[0]
    if iterations is None:
        iterations = g.training_iterations
    line_size = cfg.geometry.line_size

    mem = plant_secret(g.memory, g, s)
    pred, cache = mistrain(g, cfg, PredictorState(), CacheState(cfg.geometry),
                           iterations, mem, fuel)
    cache = attacker_flush(g, cache, line_size)
    state = g.initial_state(attacker_input, mem)
    r = simulate(g.program, state, cfg, pred, cache, fuel)

    lines = g.monitored_lines(line_size)
    probe = r.cache
    latencies = []
    for a in lines:
        probe, lat = probe_latency(probe, a, cfg)
        latencies.append(lat)
    hot = [i for i, lat in enumerate(latencies) if lat < cfg.threshold]

    seq_state, events = run_seq(state, g.program, fuel)
    region = g.monitored_region
    base = lines[0]
    arch_lines = sorted({(e.addr - base) // line_size for e in events
                         if region.contains(e.addr)})
    recovered = [i for i in hot if i not in arch_lines]

    return AttackReport(
        gadget=g.name,
        mode=cfg.mode.value,
        secret=s,
        attacker_input=attacker_input,
        latencies=latencies,
        hot_lines=hot,
        architectural_lines=arch_lines,
        recovered=recovered,
        success=recovered == [s],
        victim_cycles=r.cycles,
        probe_cycles=sum(latencies),
        threshold=cfg.threshold,
        hit_latency=cfg.hit_latency,
        miss_latency=cfg.miss_latency,
        arch_matches_seq=r.arch == seq_state,
        result=r,
    )

