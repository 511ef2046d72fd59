from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ConfigError


class Mode(enum.Enum):
    SEQ = "seq"
    A53 = "a53"
    OOO = "ooo"

    @classmethod
    def parse(cls, text):
        if isinstance(text, Mode):
            return text
        try:
            return cls(str(text).lower())
        except ValueError:
            raise ConfigError(f"unknown mode {text!r} (expected seq, a53 or ooo)") from None


@dataclass(frozen=True)
class CacheGeometry:
    line_size: int = 64
    num_sets: int = 128
    ways: int = 4

    def __post_init__(self):
        for name in ("line_size", "num_sets"):
            v = getattr(self, name)
            if v <= 0 or v & (v - 1):
                raise ConfigError(f"{name} must be a power of two, got {v}")
        if self.line_size < 4:
            raise ConfigError("line_size must be at least 4 bytes")
        if self.ways < 1:
            raise ConfigError("ways must be >= 1")

    @property
    def capacity(self):
        return self.line_size * self.num_sets * self.ways


DEFAULT_DEPTH = {Mode.SEQ: None, Mode.A53: 2, Mode.OOO: None}


@dataclass(frozen=True)
class ModelConfig:
    """Machine model parameters.

    ``spec_depth`` is the number of instructions allowed to issue under an
    unresolved branch; ``None`` means unbounded. ``resolve_delay`` is the
    number of cycles between a branch's operands arriving and the branch
    resolving.
    """

    mode: Mode = Mode.A53
    spec_depth: Optional[int] = 2
    resolve_delay: int = 2
    geometry: CacheGeometry = field(default_factory=CacheGeometry)
    hit_latency: int = 2
    miss_latency: int = 40
    alu_latency: int = 1
    threshold: int = 20
    mem_size: int = 64 * 1024

    def __post_init__(self):
        if self.spec_depth is not None and self.spec_depth < 0:
            raise ConfigError("spec_depth must be >= 0")
        if self.resolve_delay < 0:
            raise ConfigError("resolve_delay must be >= 0")
        if self.alu_latency < 1 or self.hit_latency < 1:
            raise ConfigError("latencies must be >= 1")
        if not self.hit_latency < self.miss_latency:
            raise ConfigError("hit_latency must be strictly below miss_latency")
        if not self.hit_latency < self.threshold <= self.miss_latency:
            raise ConfigError("threshold must separate hit_latency and miss_latency")
        if self.mem_size < 4:
            raise ConfigError("mem_size too small")

    @classmethod
    def for_mode(cls, mode, **overrides):
        mode = Mode.parse(mode)
        overrides.setdefault("spec_depth", DEFAULT_DEPTH[mode])
        return cls(mode=mode, **overrides)

    def with_mode(self, mode):
        mode = Mode.parse(mode)
        return replace(self, mode=mode, spec_depth=DEFAULT_DEPTH[mode])

    @property
    def effective_depth(self):
        """Depth seen by the kernel: -1 for unbounded."""
        if self.mode is not Mode.A53 or self.spec_depth is None:
            return -1
        return self.spec_depth

    def to_dict(self):
        return {
            "mode": self.mode.value,
            "spec_depth": self.spec_depth,
            "resolve_delay": self.resolve_delay,
            "hit_latency": self.hit_latency,
            "miss_latency": self.miss_latency,
            "alu_latency": self.alu_latency,
            "threshold": self.threshold,
            "mem_size": self.mem_size,
            "cache": {
                "line_size": self.geometry.line_size,
                "num_sets": self.geometry.num_sets,
                "ways": self.geometry.ways,
            },
        }
