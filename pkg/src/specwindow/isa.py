"""Tiny load/store ISA: instruction types, assembler, disassembler and the
sequential reference interpreter.

Registers are 32 bits wide, memory is byte addressed and little endian, and
every load or store moves exactly one 32-bit word.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from .errors import AssemblyError, FuelExhausted, MemoryFault

NUM_REGS = 8
WORD_MASK = 0xFFFFFFFF
DEFAULT_MEM_SIZE = 64 * 1024

ALU_OPS = ("ADD", "SUB", "AND", "OR", "XOR", "LSL", "LSR")
BRANCH_CONDS = ("LT", "GE", "Z", "NZ")


@dataclass(frozen=True)
class Load:
    rd: int
    base: int
    index: Optional[int] = None
    base_sym: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class Store:
    rs: int
    base: int
    index: Optional[int] = None
    base_sym: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class AluOp:
    op: str
    rd: int
    rs: int
    rt: Optional[int] = None
    imm: Optional[int] = None
    imm_sym: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class MovImm:
    rd: int
    imm: int
    imm_sym: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class Branch:
    cond: str
    rs: int
    rt: Optional[int]
    target: int


@dataclass(frozen=True)
class Jmp:
    target: int


@dataclass(frozen=True)
class Halt:
    pass


Instruction = Union[Load, Store, AluOp, MovImm, Branch, Jmp, Halt]


@dataclass(frozen=True)
class Program:
    instructions: Tuple[Instruction, ...] = ()
    labels: Dict[str, int] = field(default_factory=dict, compare=False)
    source: str = field(default="", compare=False)
    symbols: Dict[str, int] = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.instructions)

    def __getitem__(self, i):
        return self.instructions[i]


@dataclass(frozen=True)
class ArchState:
    regs: Tuple[int, ...]
    mem: bytes = field(repr=False)
    pc: int = 0
    halted: bool = False

    @classmethod
    def initial(cls, mem_size=DEFAULT_MEM_SIZE, regs=None, mem=None):
        if mem is None:
            mem = bytes(mem_size)
        if regs is None:
            regs = (0,) * NUM_REGS
        return cls(tuple(r & WORD_MASK for r in regs), bytes(mem))

    def with_reg(self, r, value):
        regs = list(self.regs)
        regs[r] = value & WORD_MASK
        return replace(self, regs=tuple(regs))

    def read_word(self, addr):
        if addr < 0 or addr + 4 > len(self.mem):
            raise MemoryFault(addr)
        return int.from_bytes(self.mem[addr:addr + 4], "little")


class MemEvent(NamedTuple):
    kind: str  # "load" | "store"
    addr: int


# -- assembler ---------------------------------------------------------------

_REG = r"[Rr](\d+)"
_IMM = r"(#[A-Za-z_][\w-]*|-?0[xX][0-9a-fA-F]+|-?\d+)"
_LABEL = r"([A-Za-z_.][\w.]*)"
_MEMREF = rf"\[\s*{_IMM}\s*(?:\+\s*{_REG}\s*)?\]"

_PATTERNS = [
    ("LD", re.compile(rf"LD\s+{_REG}\s*,\s*{_MEMREF}$", re.I)),
    ("ST", re.compile(rf"ST\s+{_REG}\s*,\s*{_MEMREF}$", re.I)),
    ("MOV", re.compile(rf"MOV\s+{_REG}\s*,\s*{_IMM}$", re.I)),
    ("ALU", re.compile(
        rf"({'|'.join(ALU_OPS)})\s+{_REG}\s*,\s*{_REG}\s*,\s*(?:{_REG}|{_IMM})$", re.I)),
    ("B2", re.compile(rf"B(LT|GE)\s+{_REG}\s*,\s*{_REG}\s*,\s*{_LABEL}$", re.I)),
    ("B1", re.compile(rf"B(Z|NZ)\s+{_REG}\s*,\s*{_LABEL}$", re.I)),
    ("JMP", re.compile(rf"JMP\s+{_LABEL}$", re.I)),
    ("HALT", re.compile(r"HALT$", re.I)),
]
_LABEL_DEF = re.compile(rf"^{_LABEL}\s*:\s*(.*)$")


def _reg(text, lineno):
    r = int(text)
    if not 0 <= r < NUM_REGS:
        raise AssemblyError(f"register R{r} out of range", lineno)
    return r


def _imm(text, symbols, lineno):
    """Return (value, symbol-or-None)."""
    if text.startswith("#"):
        name = text[1:]
        if name not in symbols:
            raise AssemblyError(f"unbound symbol {text}", lineno)
        return symbols[name] & WORD_MASK, name
    return int(text, 0) & WORD_MASK, None


def assemble(text: str, symbols: Optional[Dict[str, int]] = None) -> Program:
    """Parse assembly source into a Program with resolved labels and symbols."""
    symbols = dict(symbols or {})
    labels: Dict[str, int] = {}
    parsed = []  # (lineno, kind, match)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        while line:
            m = _LABEL_DEF.match(line)
            if not m:
                break
            name = m.group(1)
            if name in labels:
                raise AssemblyError(f"duplicate label {name!r}", lineno)
            labels[name] = len(parsed)
            line = m.group(2).strip()
        if not line:
            continue
        for kind, pat in _PATTERNS:
            m = pat.match(line)
            if m:
                parsed.append((lineno, kind, m))
                break
        else:
            raise AssemblyError(f"syntax error: {line!r}", lineno)

    n = len(parsed)

    def target(name, lineno):
        if name not in labels:
            raise AssemblyError(f"unknown label {name!r}", lineno)
        return labels[name]

    out: List[Instruction] = []
    for lineno, kind, m in parsed:
        g = m.groups()
        if kind in ("LD", "ST"):
            r = _reg(g[0], lineno)
            base, sym = _imm(g[1], symbols, lineno)
            index = _reg(g[2], lineno) if g[2] is not None else None
            cls = Load if kind == "LD" else Store
            out.append(cls(r, base, index, sym))
        elif kind == "MOV":
            val, sym = _imm(g[1], symbols, lineno)
            out.append(MovImm(_reg(g[0], lineno), val, sym))
        elif kind == "ALU":
            op = g[0].upper()
            rd, rs = _reg(g[1], lineno), _reg(g[2], lineno)
            if g[3] is not None:
                out.append(AluOp(op, rd, rs, rt=_reg(g[3], lineno)))
            else:
                val, sym = _imm(g[4], symbols, lineno)
                out.append(AluOp(op, rd, rs, imm=val, imm_sym=sym))
        elif kind == "B2":
            out.append(Branch(g[0].upper(), _reg(g[1], lineno), _reg(g[2], lineno),
                              target(g[3], lineno)))
        elif kind == "B1":
            out.append(Branch(g[0].upper(), _reg(g[1], lineno), None, target(g[2], lineno)))
        elif kind == "JMP":
            out.append(Jmp(target(g[0], lineno)))
        else:
            out.append(Halt())

    for name, idx in labels.items():
        if idx > n:
            raise AssemblyError(f"label {name!r} out of program")
    return Program(tuple(out), labels, text, symbols)


# -- disassembler ------------------------------------------------------------

def _fmt_imm(value, sym=None):
    if sym is not None:
        return f"#{sym}"
    return str(value) if value < 256 else f"0x{value:X}"


def _fmt_mem(base, index, sym):
    b = _fmt_imm(base, sym)
    return f"[{b} + R{index}]" if index is not None else f"[{b}]"


def format_instruction(ins: Instruction, names: Optional[Dict[int, str]] = None) -> str:
    """Canonical single-line text for one instruction."""
    names = names or {}

    def lbl(t):
        return names.get(t, f"L{t}")

    if isinstance(ins, Load):
        return f"LD R{ins.rd}, {_fmt_mem(ins.base, ins.index, ins.base_sym)}"
    if isinstance(ins, Store):
        return f"ST R{ins.rs}, {_fmt_mem(ins.base, ins.index, ins.base_sym)}"
    if isinstance(ins, MovImm):
        return f"MOV R{ins.rd}, {_fmt_imm(ins.imm, ins.imm_sym)}"
    if isinstance(ins, AluOp):
        src = f"R{ins.rt}" if ins.rt is not None else _fmt_imm(ins.imm, ins.imm_sym)
        return f"{ins.op} R{ins.rd}, R{ins.rs}, {src}"
    if isinstance(ins, Branch):
        if ins.rt is None:
            return f"B{ins.cond} R{ins.rs}, {lbl(ins.target)}"
        return f"B{ins.cond} R{ins.rs}, R{ins.rt}, {lbl(ins.target)}"
    if isinstance(ins, Jmp):
        return f"JMP {lbl(ins.target)}"
    return "HALT"


def disassemble(p: Program) -> str:
    names: Dict[int, str] = {}
    for name, idx in sorted(p.labels.items(), key=lambda kv: (kv[1], kv[0])):
        names.setdefault(idx, name)
    for ins in p.instructions:
        t = getattr(ins, "target", None)
        if t is not None and t not in names:
            names[t] = f"L{t}"
    lines = []
    for i in range(len(p.instructions) + 1):
        if i in names:
            lines.append(f"{names[i]}:")
        if i < len(p.instructions):
            lines.append("    " + format_instruction(p.instructions[i], names))
    return "\n".join(lines) + "\n" if lines else ""


# -- sequential semantics ----------------------------------------------------

def alu(op: str, a: int, b: int) -> int:
    if op == "ADD":
        r = a + b
    elif op == "SUB":
        r = a - b
    elif op == "AND":
        r = a & b
    elif op == "OR":
        r = a | b
    elif op == "XOR":
        r = a ^ b
    elif op == "LSL":
        r = a << b if b < 32 else 0
    elif op == "LSR":
        r = a >> b if b < 32 else 0
    else:
        raise ValueError(op)
    return r & WORD_MASK


def branch_taken(cond: str, a: int, b: int) -> bool:
    # unsigned compares
    if cond == "LT":
        return a < b
    if cond == "GE":
        return a >= b
    if cond == "Z":
        return a == 0
    return a != 0


def run_seq(state: ArchState, p: Program, fuel: int) -> Tuple[ArchState, List[MemEvent]]:
    """Execute in program order with no prediction or speculation.

    Raises FuelExhausted when ``fuel`` instructions retire without reaching a
    HALT, and MemoryFault on any access outside the memory image.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    regs = list(state.regs)
    mem = bytearray(state.mem)
    pc = state.pc
    events: List[MemEvent] = []
    n = len(p.instructions)
    steps = 0
    halted = state.halted
    while not halted:
        if pc >= n:
            halted = True
            break
        ins = p.instructions[pc]
        if isinstance(ins, Halt):
            halted = True
            break
        if steps >= fuel:
            raise FuelExhausted(f"no HALT after {fuel} instructions")
        steps += 1
        if isinstance(ins, (Load, Store)):
            addr = ins.base + (regs[ins.index] if ins.index is not None else 0)
            addr &= WORD_MASK
            if addr + 4 > len(mem):
                raise MemoryFault(addr, pc)
            if isinstance(ins, Load):
                regs[ins.rd] = int.from_bytes(mem[addr:addr + 4], "little")
                events.append(MemEvent("load", addr))
            else:
                mem[addr:addr + 4] = regs[ins.rs].to_bytes(4, "little")
                events.append(MemEvent("store", addr))
            pc += 1
        elif isinstance(ins, MovImm):
            regs[ins.rd] = ins.imm
            pc += 1
        elif isinstance(ins, AluOp):
            b = regs[ins.rt] if ins.rt is not None else ins.imm
            regs[ins.rd] = alu(ins.op, regs[ins.rs], b)
            pc += 1
        elif isinstance(ins, Branch):
            b = regs[ins.rt] if ins.rt is not None else 0
            pc = ins.target if branch_taken(ins.cond, regs[ins.rs], b) else pc + 1
        elif isinstance(ins, Jmp):
            pc = ins.target
    return ArchState(tuple(regs), bytes(mem), pc, halted), events
