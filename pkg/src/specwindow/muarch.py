"""Cycle-level in-order core with branch prediction and three speculation
semantics.

SEQ
    Branches wait until their operands are available, then redirect fetch
    after ``resolve_delay`` cycles. Nothing executes speculatively.
A53
    Branches are predicted at issue and open a frame. At most
    ``spec_depth`` younger instructions may issue while a frame is open, and
    a value produced under an unresolved frame cannot feed any younger
    instruction until that frame resolves.
OOO
    As A53 but the window is unbounded and speculative values forward.

In every mode a squash restores registers but keeps cache and predictor
state. Stores and HALT wait until no frame is open, so memory never changes
speculatively.
"""
from __future__ import annotations

from array import array
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

from . import _kernel_py as enc
from ._backend import kernel
from .cache import CacheState
from .config import Mode, ModelConfig
from .isa import AluOp, ArchState, Branch, Halt, Jmp, Load, MovImm, Program, Store
from .predictor import PredictorState

_MODE_CODE = {Mode.SEQ: enc.MODE_SEQ, Mode.A53: enc.MODE_A53, Mode.OOO: enc.MODE_OOO}
_ALU_CODE = {"ADD": enc.OP_ADD, "SUB": enc.OP_SUB, "AND": enc.OP_AND, "OR": enc.OP_OR,
             "XOR": enc.OP_XOR, "LSL": enc.OP_LSL, "LSR": enc.OP_LSR}
_BR_CODE = {"LT": enc.OP_BLT, "GE": enc.OP_BGE, "Z": enc.OP_BZ, "NZ": enc.OP_BNZ}


def encode(p: Program) -> array:
    """Flatten a Program into the kernel's int64 row format."""
    rows = []
    for ins in p.instructions:
        if isinstance(ins, Load):
            rows += [enc.OP_LD, ins.rd, -1 if ins.index is None else ins.index, -1, ins.base, 0]
        elif isinstance(ins, Store):
            rows += [enc.OP_ST, ins.rs, -1 if ins.index is None else ins.index, -1, ins.base, 0]
        elif isinstance(ins, MovImm):
            rows += [enc.OP_MOV, ins.rd, -1, -1, ins.imm, 0]
        elif isinstance(ins, AluOp):
            rt = -1 if ins.rt is None else ins.rt
            rows += [_ALU_CODE[ins.op], ins.rd, ins.rs, rt, ins.imm or 0, 0]
        elif isinstance(ins, Branch):
            rt = -1 if ins.rt is None else ins.rt
            rows += [_BR_CODE[ins.cond], ins.rs, rt, -1, 0, ins.target]
        elif isinstance(ins, Jmp):
            rows += [enc.OP_JMP, -1, -1, -1, 0, ins.target]
        elif isinstance(ins, Halt):
            rows += [enc.OP_HALT, -1, -1, -1, 0, 0]
        else:
            raise TypeError(f"not an instruction: {ins!r}")
    return array("q", rows)


@dataclass(frozen=True)
class CacheEvent:
    cycle: int
    kind: str  # "fill" | "hit"
    set: int
    tag: int
    speculative: bool
    addr: int
    pc: int

    @property
    def line(self) -> Tuple[int, int]:
        return (self.set, self.tag)


class ObservationTrace(tuple):
    """Cache events in cycle order."""

    def speculative(self) -> List[CacheEvent]:
        return [e for e in self if e.speculative]

    def lines(self) -> List[Tuple[int, int]]:
        return [e.line for e in self]


@dataclass(frozen=True)
class BranchRecord:
    pc: int
    issue_cycle: int
    resolve_cycle: int
    predicted: Optional[bool]  # None in SEQ mode
    actual: bool

    @property
    def squashed(self) -> bool:
        return self.predicted is not None and self.predicted != self.actual


@dataclass
class SimResult:
    arch: ArchState
    cycles: int
    trace: ObservationTrace
    cache: CacheState
    predictor: PredictorState
    branches: List[BranchRecord]
    max_spec_count: int = 0
    depth_violations: int = 0
    spec_mem_writes: int = 0


@lru_cache(maxsize=128)
def _encoded(instructions):
    return encode(Program(instructions))


def simulate(p: Program, s0: ArchState, cfg: ModelConfig, pred0: PredictorState,
             cache0: CacheState, fuel: int = 100_000) -> SimResult:
    """Run ``p`` from ``s0`` under ``cfg``; inputs are not modified."""
    if s0.halted:
        return SimResult(s0, 0, ObservationTrace(), cache0.copy(), pred0.copy(), [])
    g = cache0.geometry
    regs = list(s0.regs)
    mem = bytearray(s0.mem)
    cache = cache0.copy()
    pred = pred0.copy()
    pc, cycles, raw_events, raw_log, max_count, violations, spec_writes = kernel.run_core(
        _encoded(p.instructions), len(p.instructions), s0.pc, regs, mem, cache.tags,
        g.line_size.bit_length() - 1, g.num_sets.bit_length() - 1, g.ways,
        pred.table, _MODE_CODE[cfg.mode], cfg.effective_depth, cfg.resolve_delay,
        cfg.hit_latency, cfg.miss_latency, cfg.alu_latency, fuel)
    trace = ObservationTrace(
        CacheEvent(c, "hit" if k == enc.EV_HIT else "fill", s, t, bool(sp), a, ipc)
        for c, k, s, t, sp, a, ipc in raw_events)
    branches = [BranchRecord(bpc, ic, rc, None if pr < 0 else bool(pr), bool(ac))
                for bpc, ic, rc, pr, ac in raw_log]
    arch = ArchState(tuple(regs), bytes(mem), pc, True)
    return SimResult(arch, cycles, trace, cache, pred, branches,
                     max_count, violations, spec_writes)
