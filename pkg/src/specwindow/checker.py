"""Speculative non-interference by exhaustive enumeration of the secret domain.

A gadget is SECURE under a model and observer when, for every attacker input,
the observation is the same for every secret value. Training is performed
once before the secret is planted, so every run starts from identical
predictor and cache state and the secret is the only varying input.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .cache import CacheState, line_index
from .config import DEFAULT_DEPTH, Mode, ModelConfig
from .errors import ConfigError
from .gadgets import GadgetSpec
from .harness import DEFAULT_FUEL, attacker_flush, mistrain, plant_secret
from .muarch import SimResult, simulate
from .predictor import PredictorState


class ObserverMode(enum.Enum):
    FILL_TRACE = "fill-trace"
    FINAL_CACHE = "final-cache"
    PROBE = "probe"

    @classmethod
    def parse(cls, text):
        if isinstance(text, ObserverMode):
            return text
        try:
            return cls(str(text).lower().replace("_", "-"))
        except ValueError:
            raise ConfigError(
                f"unknown observer {text!r} (expected fill-trace, final-cache or probe)") from None


def observe(r: SimResult, m: ObserverMode, g: GadgetSpec) -> tuple:
    if m is ObserverMode.FILL_TRACE:
        return tuple(e.line for e in r.trace)
    if m is ObserverMode.FINAL_CACHE:
        return tuple(r.cache.resident())
    if g.monitored is None:
        raise ConfigError(f"PROBE observer needs a monitored region; {g.name} has none")
    geom = r.cache.geometry
    resident = set(r.cache.resident())
    return tuple(line_index(a, geom) in resident for a in g.monitored_lines(geom.line_size))


@dataclass(frozen=True)
class Witness:
    attacker_input: int
    secret_ref: int
    secret: int
    index: int
    ref_element: object
    element: object


@dataclass(frozen=True)
class Verdict:
    gadget: str
    leak: bool
    mode: str
    label: str
    observer: str
    spec_depth: Optional[int]
    resolve_delay: int
    training_iterations: int
    runs: int
    witness: Optional[Witness] = None
    leaking_inputs: Tuple[int, ...] = ()

    @property
    def status(self) -> str:
        return "LEAK" if self.leak else "SECURE"


def config_label(cfg: ModelConfig) -> str:
    extra = []
    if cfg.mode is Mode.A53 and cfg.spec_depth != DEFAULT_DEPTH[cfg.mode]:
        extra.append(f"D={cfg.spec_depth}")
    if cfg.resolve_delay != ModelConfig.resolve_delay:
        extra.append(f"rho={cfg.resolve_delay}")
    return cfg.mode.value + (f"({','.join(extra)})" if extra else "")


def _first_difference(a: tuple, b: tuple) -> Tuple[int, object, object]:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i, x, y
    i = min(len(a), len(b))
    return i, a[i] if i < len(a) else None, b[i] if i < len(b) else None


class _Runner:
    """Trained state shared by every (input, secret) run of one check."""

    def __init__(self, g, cfg, iterations, fuel):
        self.g, self.cfg, self.fuel = g, cfg, fuel
        pred, cache = mistrain(g, cfg, PredictorState(), CacheState(cfg.geometry),
                               iterations, g.memory, fuel)
        self.pred = pred
        self.cache = attacker_flush(g, cache, cfg.geometry.line_size)

    def run(self, attacker_input, secret) -> SimResult:
        mem = plant_secret(self.g.memory, self.g, secret)
        return simulate(self.g.program, self.g.initial_state(attacker_input, mem), self.cfg,
                        self.pred, self.cache, self.fuel)


def check_gadget(g: GadgetSpec, cfg: ModelConfig, m: ObserverMode = ObserverMode.FILL_TRACE,
                 iterations: Optional[int] = None, fuel: int = DEFAULT_FUEL) -> Verdict:
    m = ObserverMode.parse(m)
    if iterations is None:
        iterations = g.training_iterations
    secrets = g.secrets
    if len(secrets) == 0:
        raise ConfigError(f"{g.name}: empty secret domain")
    runner = _Runner(g, cfg, iterations, fuel)
    s_ref = secrets[0]

    witness = None
    leaking = []
    runs = 0
    for a in g.valid_inputs + g.malicious_inputs:
        ref = observe(runner.run(a, s_ref), m, g)
        runs += 1
        for s in secrets[1:]:
            obs = observe(runner.run(a, s), m, g)
            runs += 1
            if obs != ref:
                if witness is None:
                    i, x, y = _first_difference(ref, obs)
                    witness = Witness(a, s_ref, s, i, x, y)
                if a not in leaking:
                    leaking.append(a)

    return Verdict(
        gadget=g.name, leak=witness is not None, mode=cfg.mode.value, label=config_label(cfg),
        observer=m.value, spec_depth=cfg.spec_depth, resolve_delay=cfg.resolve_delay,
        training_iterations=iterations, runs=runs, witness=witness,
        leaking_inputs=tuple(leaking))


def replay_witness(g: GadgetSpec, cfg: ModelConfig, v: Verdict,
                   fuel: int = DEFAULT_FUEL) -> bool:
    """Re-simulate a LEAK witness; True when the observations still differ."""
    if v.witness is None:
        raise ValueError("verdict has no witness")
    w = v.witness
    m = ObserverMode.parse(v.observer)
    runner = _Runner(g, cfg, v.training_iterations, fuel)
    ref = observe(runner.run(w.attacker_input, w.secret_ref), m, g)
    obs = observe(runner.run(w.attacker_input, w.secret), m, g)
    return ref != obs and _first_difference(ref, obs) == (w.index, w.ref_element, w.element)


@dataclass
class VerdictMatrix:
    observer: str
    gadgets: List[str]
    labels: List[str]
    cells: Dict[Tuple[str, str], Verdict] = field(default_factory=dict)

    def __getitem__(self, key) -> Verdict:
        return self.cells[key]

    @property
    def any_leak(self) -> bool:
        return any(v.leak for v in self.cells.values())

    def rows(self):
        for gname in self.gadgets:
            yield gname, [self.cells[(gname, lbl)] for lbl in self.labels]


def compare_models(gadgets: Sequence[GadgetSpec], cfgs: Sequence[ModelConfig],
                   m: ObserverMode = ObserverMode.FILL_TRACE,
                   fuel: int = DEFAULT_FUEL) -> VerdictMatrix:
    if isinstance(gadgets, GadgetSpec):
        gadgets = [gadgets]
    if not cfgs:
        raise ConfigError("compare_models needs at least one config")
    m = ObserverMode.parse(m)
    labels = [config_label(c) for c in cfgs]
    if len(set(labels)) != len(labels):
        raise ConfigError("duplicate model configurations")
    matrix = VerdictMatrix(m.value, [g.name for g in gadgets], labels)
    for g in gadgets:
        for cfg, lbl in zip(cfgs, labels):
            matrix.cells[(g.name, lbl)] = check_gadget(g, cfg, m, fuel=fuel)
    return matrix
