"""Gadget manifests: victim program, memory layout, secret and attacker inputs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import jsonschema

from .errors import ConfigError, SimulationError
from .isa import DEFAULT_MEM_SIZE, WORD_MASK, ArchState, Program, assemble, run_seq

_ADDR = {"oneOf": [{"type": "integer", "minimum": 0},
                   {"type": "string", "pattern": r"^(#[A-Za-z_][\w-]*(\+(0[xX][0-9a-fA-F]+|\d+))?|0[xX][0-9a-fA-F]+|\d+)$"}]}
_WORD = {"oneOf": [{"type": "integer", "minimum": 0, "maximum": WORD_MASK},
                   {"type": "string", "pattern": r"^(0[xX][0-9a-fA-F]+|\d+)$"}]}

MANIFEST_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "assembly", "symbols", "regions", "secret", "attacker_register",
                 "valid_inputs", "malicious_inputs", "training_iterations"],
    "properties": {
        "schema_version": {"const": 1},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "assembly": {"type": "string"},
        "leak_layout": {"enum": ["raw", "scaled"]},
        "mem_size": {"type": "integer", "minimum": 4},
        "symbols": {"type": "object", "additionalProperties": _ADDR},
        "regions": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "required": ["base", "size"],
                "properties": {"base": _ADDR, "size": {"type": "integer", "minimum": 1},
                               "public": {"type": "boolean"}},
            },
        },
        "monitored": {"type": "string"},
        "memory": {
            "type": "array",
            "items": {"type": "object", "additionalProperties": False,
                      "required": ["addr", "words"],
                      "properties": {"addr": _ADDR, "words": {"type": "array", "items": _WORD}}},
        },
        "secret": {
            "type": "object",
            "additionalProperties": False,
            "required": ["addresses", "domain"],
            "properties": {
                "addresses": {"type": "array", "minItems": 1, "items": _ADDR},
                "domain": {"type": "array", "minItems": 2, "maxItems": 2,
                           "items": {"type": "integer", "minimum": 0, "maximum": WORD_MASK}},
            },
        },
        "attacker_register": {"type": "integer", "minimum": 0, "maximum": 7},
        "valid_inputs": {"type": "array", "minItems": 1, "items": _WORD},
        "malicious_inputs": {"type": "array", "items": _WORD},
        "training_iterations": {"type": "integer", "minimum": 0},
        "attacker_flush": {"type": "array", "items": _ADDR},
    },
}


@dataclass(frozen=True)
class Region:
    base: int
    size: int
    public: bool = True

    @property
    def end(self):
        return self.base + self.size

    def contains(self, addr, width=1):
        return self.base <= addr and addr + width <= self.end


@dataclass(frozen=True)
class GadgetSpec:
    name: str
    program: Program
    symbols: Dict[str, int]
    regions: Dict[str, Region]
    secret_addresses: Tuple[int, ...]
    secret_domain: Tuple[int, int]  # inclusive
    attacker_register: int
    valid_inputs: Tuple[int, ...]
    malicious_inputs: Tuple[int, ...]
    training_iterations: int
    memory: bytes = field(repr=False)
    monitored: Optional[str] = None
    attacker_flush: Tuple[int, ...] = ()
    leak_layout: str = "raw"
    description: str = ""

    @property
    def secrets(self) -> range:
        lo, hi = self.secret_domain
        return range(lo, hi + 1)

    @property
    def monitored_region(self) -> Region:
        if self.monitored is None:
            raise ConfigError(f"gadget {self.name!r} has no monitored region")
        return self.regions[self.monitored]

    def monitored_lines(self, line_size: int) -> List[int]:
        """Base address of every cache line in the monitored region."""
        r = self.monitored_region
        first = r.base - r.base % line_size
        return list(range(first, r.end, line_size))

    def initial_state(self, attacker_input: int, mem: Optional[bytes] = None) -> ArchState:
        regs = [0] * 8
        regs[self.attacker_register] = attacker_input
        return ArchState.initial(regs=regs, mem=self.memory if mem is None else mem)


def _addr(value, symbols):
    if isinstance(value, int):
        return value
    if value.startswith("#"):
        name, _, off = value[1:].partition("+")
        if name not in symbols:
            raise ConfigError(f"unknown symbol #{name}")
        return symbols[name] + (int(off, 0) if off else 0)
    return int(value, 0)


def _word(value):
    return value if isinstance(value, int) else int(value, 0)


def parse_manifest(data: dict, source_text: str) -> GadgetSpec:
    try:
        jsonschema.validate(data, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError(f"manifest {data.get('name', '?')!r}: {e.message}") from None

    name = data["name"]
    symbols = {}
    for sym, v in data["symbols"].items():
        symbols[sym] = _addr(v, symbols)
    mem_size = data.get("mem_size", DEFAULT_MEM_SIZE)
    regions = {rn: Region(_addr(r["base"], symbols), r["size"], r.get("public", True))
               for rn, r in data["regions"].items()}

    ordered = sorted(regions.items(), key=lambda kv: kv[1].base)
    for (na, a), (nb, b) in zip(ordered, ordered[1:]):
        if a.end > b.base:
            raise ConfigError(f"{name}: regions {na} and {nb} overlap")
    for rn, r in regions.items():
        if r.end > mem_size:
            raise ConfigError(f"{name}: region {rn} outside memory image")

    monitored = data.get("monitored")
    if monitored is not None and monitored not in regions:
        raise ConfigError(f"{name}: monitored region {monitored!r} not declared")

    secret_addrs = tuple(_addr(a, symbols) for a in data["secret"]["addresses"])
    lo, hi = data["secret"]["domain"]
    if lo > hi:
        raise ConfigError(f"{name}: empty secret domain")
    for a in secret_addrs:
        if a + 4 > mem_size:
            raise ConfigError(f"{name}: secret address 0x{a:x} outside memory image")
        if monitored is not None and regions[monitored].contains(a):
            raise ConfigError(f"{name}: secret inside monitored region")

    mem = bytearray(mem_size)
    for chunk in data.get("memory", []):
        base = _addr(chunk["addr"], symbols)
        for i, w in enumerate(chunk["words"]):
            a = base + 4 * i
            if a + 4 > mem_size:
                raise ConfigError(f"{name}: memory init at 0x{a:x} outside image")
            mem[a:a + 4] = _word(w).to_bytes(4, "little")

    program = assemble(source_text, symbols)
    spec = GadgetSpec(
        name=name,
        program=program,
        symbols=symbols,
        regions=regions,
        secret_addresses=secret_addrs,
        secret_domain=(lo, hi),
        attacker_register=data["attacker_register"],
        valid_inputs=tuple(_word(v) for v in data["valid_inputs"]),
        malicious_inputs=tuple(_word(v) for v in data["malicious_inputs"]),
        training_iterations=data["training_iterations"],
        memory=bytes(mem),
        monitored=monitored,
        attacker_flush=tuple(_addr(a, symbols) for a in data.get("attacker_flush", [])),
        leak_layout=data.get("leak_layout", "raw"),
        description=data.get("description", ""),
    )
    check_valid_inputs(spec)
    return spec


def check_valid_inputs(g: GadgetSpec, fuel: int = 10_000):
    """Every valid input must run sequentially inside the declared regions."""
    regions = list(g.regions.values())
    for v in g.valid_inputs:
        try:
            _, events = run_seq(g.initial_state(v), g.program, fuel)
        except SimulationError as e:
            raise ConfigError(f"{g.name}: valid input {v} fails sequentially: {e}") from None
        for ev in events:
            if not any(r.contains(ev.addr, 4) for r in regions):
                raise ConfigError(
                    f"{g.name}: valid input {v} accesses 0x{ev.addr:x} outside declared regions")


def load_manifest(path) -> GadgetSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read manifest {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    asm = path.parent / data.get("assembly", "")
    if not asm.is_file():
        raise ConfigError(f"{path}: assembly file {asm.name!r} not found")
    return parse_manifest(data, asm.read_text())


def _corpus_dir():
    return resources.files("specwindow") / "corpus"


def corpus_names() -> List[str]:
    return sorted(p.name[:-5] for p in _corpus_dir().iterdir() if p.name.endswith(".json"))


_loaded: Dict[str, GadgetSpec] = {}


def load_gadget(name: str) -> GadgetSpec:
    """Corpus gadget by name, or a manifest path."""
    if name in _loaded:
        return _loaded[name]
    if name.endswith(".json") or "/" in name:
        return load_manifest(name)
    entry = _corpus_dir() / f"{name}.json"
    if not entry.is_file():
        raise ConfigError(f"unknown gadget {name!r}; known: {', '.join(corpus_names())}")
    data = json.loads(entry.read_text())
    spec = parse_manifest(data, (_corpus_dir() / data["assembly"]).read_text())
    _loaded[name] = spec
    return spec


CORE_GADGETS = ("spectre-pht", "siscloak1", "siscloak2")
