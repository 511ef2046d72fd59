"""Pure-Python cycle kernel.

Same algorithm and calling convention as the compiled ``_ckernel`` module;
used when the extension is not built, or when SPECWINDOW_PURE=1.

Program encoding: flat int64 array, ROW ints per instruction:
``op, a, b, c, imm, target``. Operand roles per opcode:

    LD   a=rd  b=index|-1  imm=base
    ST   a=rs  b=index|-1  imm=base
    MOV  a=rd  imm
    ALU  a=rd  b=rs  c=rt|-1  imm (when c == -1)
    Bcc  a=rs  b=rt|-1  target
    JMP  target
"""
from .errors import FuelExhausted, MemoryFault

ROW = 6

OP_LD, OP_ST, OP_MOV = 0, 1, 2
OP_ADD, OP_SUB, OP_AND, OP_OR, OP_XOR, OP_LSL, OP_LSR = 3, 4, 5, 6, 7, 8, 9
OP_BLT, OP_BGE, OP_BZ, OP_BNZ = 10, 11, 12, 13
OP_JMP, OP_HALT = 14, 15

MODE_SEQ, MODE_A53, MODE_OOO = 0, 1, 2

EV_FILL, EV_HIT = 0, 1

PRED_ENTRIES = 256
MASK = 0xFFFFFFFF

BACKEND = "python"


def cache_access(tags, set_idx, tag, ways):
    """Touch (set_idx, tag); True on hit. Rows are MRU first, -1 = empty."""
    base = set_idx * ways
    for i in range(ways):
        if tags[base + i] == tag:
            for j in range(i, 0, -1):
                tags[base + j] = tags[base + j - 1]
            tags[base] = tag
            return True
    for j in range(ways - 1, 0, -1):
        tags[base + j] = tags[base + j - 1]
    tags[base] = tag
    return False


def cache_flush(tags, set_idx, tag, ways):
    base = set_idx * ways
    for i in range(ways):
        if tags[base + i] == tag:
            for j in range(i, ways - 1):
                tags[base + j] = tags[base + j + 1]
            tags[base + ways - 1] = -1
            return True
    return False


class SpecFrame:
    __slots__ = ("fid", "pc", "predicted", "actual", "issued", "resolve_at",
                 "target", "regs", "ready", "owner", "count", "fault")

    def __init__(self, fid, pc, predicted, actual, issued, resolve_at, target,
                 regs, ready, owner):
        self.fid = fid
        self.pc = pc
        self.predicted = predicted
        self.actual = actual
        self.issued = issued
        self.resolve_at = resolve_at
        self.target = target
        self.regs = regs
        self.ready = ready
        self.owner = owner
        self.count = 0
        self.fault = -1


def _alu(op, x, y):
    if op == OP_ADD:
        return (x + y) & MASK
    if op == OP_SUB:
        return (x - y) & MASK
    if op == OP_AND:
        return x & y
    if op == OP_OR:
        return x | y
    if op == OP_XOR:
        return x ^ y
    if op == OP_LSL:
        return (x << y) & MASK if y < 32 else 0
    return x >> y if y < 32 else 0


def _taken(op, x, y):
    if op == OP_BLT:
        return x < y
    if op == OP_BGE:
        return x >= y
    if op == OP_BZ:
        return x == 0
    return x != 0


def run_core(code, n, pc, regs, mem, tags, line_shift, set_shift, ways, pred,
             mode, depth, rho, hit_lat, miss_lat, alu_lat, fuel):
    """Run the cycle loop.

    ``regs`` (list of 8 ints), ``mem`` (bytearray), ``tags`` (array 'q') and
    ``pred`` (bytearray of 2-bit counters) are updated in place.

    Returns ``(pc, cycles, events, branch_log, max_count, violations,
    spec_writes)``. Events are ``(cycle, kind, set, tag, speculative, addr,
    pc)``; branch log rows are ``(pc, issue_cycle, resolve_cycle,
    predicted, actual)`` with predicted = -1 in SEQ mode.
    """
    memsize = len(mem)
    set_mask = (1 << set_shift) - 1
    tag_shift = line_shift + set_shift
    ready = [0] * 8
    owner = [-1] * 8
    frames = []
    next_fid = 0
    events = []
    log = []
    max_count = 0
    violations = 0
    spec_writes = 0
    seq_wait = 0
    cycle = 0

    while True:
        if cycle >= fuel:
            raise FuelExhausted(f"simulation exceeded {fuel} cycles")

        # -- issue at most one instruction ---------------------------------
        issued = False
        if pc >= n:
            op = OP_HALT
        else:
            k = pc * ROW
            op = code[k]
        budget_ok = True
        if frames and depth >= 0:
            for f in frames:
                if f.count >= depth:
                    budget_ok = False
                    break
        oldest = frames[0].fid if frames else 1 << 62

        if cycle < seq_wait:
            pass
        elif op == OP_HALT:
            if not frames:
                return pc, cycle + 1, events, log, max_count, violations, spec_writes
        elif not budget_ok:
            pass
        elif op >= OP_BLT and op <= OP_BNZ:
            a = code[k + 1]
            b = code[k + 2]
            rdy = ready[a]
            if b >= 0 and ready[b] > rdy:
                rdy = ready[b]
            y = regs[b] if b >= 0 else 0
            actual = _taken(op, regs[a], y)
            if mode == MODE_SEQ:
                if rdy <= cycle:
                    log.append((pc, cycle, cycle + rho, -1, int(actual)))
                    seq_wait = cycle + rho + 1
                    pc = code[k + 5] if actual else pc + 1
                    issued = True
            elif mode == MODE_A53 and (owner[a] >= oldest or (b >= 0 and owner[b] >= oldest)):
                pass
            else:
                predicted = pred[pc & 0xFF] >= 2
                for f in frames:
                    f.count += 1
                frames.append(SpecFrame(
                    next_fid, pc, predicted, actual, cycle,
                    (rdy if rdy > cycle else cycle) + rho, code[k + 5],
                    regs[:], ready[:], owner[:]))
                next_fid += 1
                pc = code[k + 5] if predicted else pc + 1
                issued = True
        elif op == OP_JMP:
            for f in frames:
                f.count += 1
            pc = code[k + 5]
            issued = True
        elif op == OP_MOV:
            a = code[k + 1]
            regs[a] = code[k + 4]
            ready[a] = cycle + alu_lat
            owner[a] = frames[-1].fid if frames else -1
            for f in frames:
                f.count += 1
            pc += 1
            issued = True
        elif op == OP_LD:
            a = code[k + 1]
            b = code[k + 2]
            if b < 0 or (ready[b] <= cycle and not (mode == MODE_A53 and owner[b] >= oldest)):
                addr = (code[k + 4] + (regs[b] if b >= 0 else 0)) & MASK
                if addr + 4 > memsize:
                    if not frames:
                        raise MemoryFault(addr, pc)
                    # transient fault: suppressed, re-raised if the path commits
                    if frames[-1].fault < 0:
                        frames[-1].fault = addr
                    regs[a] = 0
                    ready[a] = cycle + 1
                else:
                    s = (addr >> line_shift) & set_mask
                    t = addr >> tag_shift
                    hit = cache_access(tags, s, t, ways)
                    events.append((cycle, EV_HIT if hit else EV_FILL, s, t,
                                   bool(frames), addr, pc))
                    regs[a] = mem[addr] | (mem[addr + 1] << 8) | (mem[addr + 2] << 16) | (mem[addr + 3] << 24)
                    ready[a] = cycle + (hit_lat if hit else miss_lat)
                owner[a] = frames[-1].fid if frames else -1
                for f in frames:
                    f.count += 1
                pc += 1
                issued = True
        elif op == OP_ST:
            a = code[k + 1]
            b = code[k + 2]
            if not frames and ready[a] <= cycle and (b < 0 or ready[b] <= cycle):
                addr = (code[k + 4] + (regs[b] if b >= 0 else 0)) & MASK
                if addr + 4 > memsize:
                    raise MemoryFault(addr, pc)
                s = (addr >> line_shift) & set_mask
                t = addr >> tag_shift
                hit = cache_access(tags, s, t, ways)
                events.append((cycle, EV_HIT if hit else EV_FILL, s, t, False, addr, pc))
                v = regs[a]
                mem[addr] = v & 0xFF
                mem[addr + 1] = (v >> 8) & 0xFF
                mem[addr + 2] = (v >> 16) & 0xFF
                mem[addr + 3] = v >> 24
                if frames:
                    spec_writes += 1
                pc += 1
                issued = True
        else:
            a = code[k + 1]
            b = code[k + 2]
            c = code[k + 3]
            ok = ready[b] <= cycle and (c < 0 or ready[c] <= cycle)
            if ok and mode == MODE_A53 and (owner[b] >= oldest or (c >= 0 and owner[c] >= oldest)):
                ok = False
            if ok:
                regs[a] = _alu(op, regs[b], regs[c] if c >= 0 else code[k + 4])
                ready[a] = cycle + alu_lat
                owner[a] = frames[-1].fid if frames else -1
                for f in frames:
                    f.count += 1
                pc += 1
                issued = True

        if issued and frames:
            for f in frames:
                if f.count > max_count:
                    max_count = f.count
                if depth >= 0 and f.count > depth:
                    violations += 1

        # -- resolve branches, oldest first --------------------------------
        while frames and frames[0].resolve_at <= cycle:
            f = frames.pop(0)
            pred_i = f.pc & 0xFF
            ctr = pred[pred_i]
            if f.actual:
                if ctr < 3:
                    pred[pred_i] = ctr + 1
            elif ctr > 0:
                pred[pred_i] = ctr - 1
            log.append((f.pc, f.issued, cycle, int(f.predicted), int(f.actual)))
            if f.predicted == f.actual:
                if f.fault >= 0:
                    raise MemoryFault(f.fault)
            else:
                regs[:] = f.regs
                ready[:] = f.ready
                owner[:] = f.owner
                pc = f.target if f.actual else f.pc + 1
                frames.clear()
                break

        cycle += 1
