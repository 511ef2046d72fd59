"""Random terminating programs for architectural-equivalence testing.

Every program is one counted loop (R7 is the counter) whose body mixes ALU
ops, loads, stores and forward branches. Memory indices are either masked
into range or guarded by a bounds branch, so the committed path never faults
while mispredicted paths can still reach out-of-image addresses.
"""
from __future__ import annotations

import random
from typing import Tuple

from .cache import CacheState
from .config import CacheGeometry
from .isa import ALU_OPS, ArchState, DEFAULT_MEM_SIZE, Program, assemble
from .predictor import ENTRIES, PredictorState

_COUNTER = 7
_INDEX = 6
_BOUND = 5


def _reg(rng):
    return rng.randrange(0, _BOUND)


def random_source(rng: random.Random, body_len: Tuple[int, int] = (4, 14),
                  mem_size: int = DEFAULT_MEM_SIZE) -> str:
    lines = [f"MOV R{_COUNTER}, {rng.randint(1, 4)}", "loop:"]
    n = rng.randint(*body_len)
    pending = []  # (label, remaining items before it is placed)
    label_no = 0
    hi_base = mem_size - 0x1000
    for _ in range(n):
        kind = rng.choices(
            ["mov", "alu", "ld", "st", "br", "guard", "jmp"],
            weights=[2, 4, 4, 2, 3, 2, 1])[0]
        if kind == "mov":
            lines.append(f"MOV R{_reg(rng)}, {rng.choice([0, 1, rng.getrandbits(32)])}")
        elif kind == "alu":
            op = rng.choice(ALU_OPS)
            if rng.random() < 0.5:
                src = f"R{rng.randrange(0, 7)}"
            else:
                src = str(rng.randrange(0, 40)) if op in ("LSL", "LSR") else hex(rng.getrandbits(32))
            lines.append(f"{op} R{_reg(rng)}, R{rng.randrange(0, 7)}, {src}")
        elif kind in ("ld", "st"):
            base = rng.randrange(0, hi_base) & ~3
            lines.append(f"AND R{_INDEX}, R{rng.randrange(0, 7)}, 0xFFC")
            mnem = "LD" if kind == "ld" else "ST"
            lines.append(f"{mnem} R{_reg(rng)}, [{base} + R{_INDEX}]")
        elif kind == "guard":
            r = _reg(rng)
            label = f"g{label_no}"
            label_no += 1
            lines.append(f"MOV R{_BOUND}, {mem_size - 4}")
            lines.append(f"BGE R{r}, R{_BOUND}, {label}")
            lines.append(f"LD R{_reg(rng)}, [0 + R{r}]")
            lines.append(f"{label}:")
        elif kind == "br":
            label = f"f{label_no}"
            label_no += 1
            cond = rng.choice(["BLT", "BGE", "BZ", "BNZ"])
            if cond in ("BLT", "BGE"):
                lines.append(f"{cond} R{rng.randrange(0, 7)}, R{rng.randrange(0, 7)}, {label}")
            else:
                lines.append(f"{cond} R{rng.randrange(0, 7)}, {label}")
            pending.append([label, rng.randint(1, 3)])
        else:
            label = f"j{label_no}"
            label_no += 1
            lines.append(f"JMP {label}")
            pending.append([label, rng.randint(0, 2)])
        still = []
        for item in pending:
            item[1] -= 1
            if item[1] < 0:
                lines.append(f"{item[0]}:")
            else:
                still.append(item)
        pending = still
    for label, _ in pending:
        lines.append(f"{label}:")
    lines += [f"SUB R{_COUNTER}, R{_COUNTER}, 1", f"BNZ R{_COUNTER}, loop", "HALT"]
    return "\n".join(lines) + "\n"


def random_case(seed: int, geometry: CacheGeometry = None,
                mem_size: int = DEFAULT_MEM_SIZE
                ) -> Tuple[Program, ArchState, PredictorState, CacheState]:
    """Program, initial state, predictor and warm cache, all from ``seed``."""
    rng = random.Random(seed)
    program = assemble(random_source(rng, mem_size=mem_size))
    regs = [rng.getrandbits(32) if rng.random() < 0.7 else rng.randrange(0, 64)
            for _ in range(_BOUND)] + [0, 0, 0]
    mem = bytearray(mem_size)
    for _ in range(64):
        a = rng.randrange(0, mem_size - 4) & ~3
        mem[a:a + 4] = rng.getrandbits(32).to_bytes(4, "little")
    state = ArchState.initial(regs=regs, mem=bytes(mem))
    pred = PredictorState(bytes(rng.randrange(0, 4) for _ in range(ENTRIES)))
    cache = CacheState(geometry or CacheGeometry())
    for _ in range(rng.randrange(0, 64)):
        cache.touch(rng.randrange(0, mem_size - 4))
    return program, state, pred, cache
