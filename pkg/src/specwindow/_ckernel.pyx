# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cycle kernel. Mirrors ``_kernel_py`` exactly; see there for the
program encoding and the return layout."""

from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy

from .errors import FuelExhausted, MemoryFault

BACKEND = "cython"

cdef enum:
    ROW = 6
    OP_LD = 0
    OP_ST = 1
    OP_MOV = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_AND = 5
    OP_OR = 6
    OP_XOR = 7
    OP_LSL = 8
    OP_LSR = 9
    OP_BLT = 10
    OP_BGE = 11
    OP_BZ = 12
    OP_BNZ = 13
    OP_JMP = 14
    OP_HALT = 15
    MODE_SEQ = 0
    MODE_A53 = 1
    EV_FILL = 0
    EV_HIT = 1

ctypedef unsigned int u32
ctypedef long long i64

cdef i64 NO_FRAME = 1LL << 62


cdef struct Frame:
    i64 fid
    i64 pc
    bint predicted
    bint actual
    i64 issued
    i64 resolve_at
    i64 target
    u32 regs[8]
    i64 ready[8]
    i64 owner[8]
    i64 count
    i64 fault


cdef inline bint _access(i64[:] tags, Py_ssize_t set_idx, i64 tag, Py_ssize_t ways) noexcept:
    cdef Py_ssize_t base = set_idx * ways
    cdef Py_ssize_t i, j
    for i in range(ways):
        if tags[base + i] == tag:
            j = i
            while j > 0:
                tags[base + j] = tags[base + j - 1]
                j -= 1
            tags[base] = tag
            return True
    j = ways - 1
    while j > 0:
        tags[base + j] = tags[base + j - 1]
        j -= 1
    tags[base] = tag
    return False


def cache_access(i64[:] tags, Py_ssize_t set_idx, i64 tag, Py_ssize_t ways):
    return _access(tags, set_idx, tag, ways)


def cache_flush(i64[:] tags, Py_ssize_t set_idx, i64 tag, Py_ssize_t ways):
    cdef Py_ssize_t base = set_idx * ways
    cdef Py_ssize_t i, j
    for i in range(ways):
        if tags[base + i] == tag:
            for j in range(i, ways - 1):
                tags[base + j] = tags[base + j + 1]
            tags[base + ways - 1] = -1
            return True
    return False


cdef inline u32 _alu(i64 op, u32 x, u32 y) noexcept:
    if op == OP_ADD:
        return x + y
    if op == OP_SUB:
        return x - y
    if op == OP_AND:
        return x & y
    if op == OP_OR:
        return x | y
    if op == OP_XOR:
        return x ^ y
    if op == OP_LSL:
        return (x << y) if y < 32 else 0
    return (x >> y) if y < 32 else 0


cdef inline bint _taken(i64 op, u32 x, u32 y) noexcept:
    if op == OP_BLT:
        return x < y
    if op == OP_BGE:
        return x >= y
    if op == OP_BZ:
        return x == 0
    return x != 0


def run_core(const i64[:] code, Py_ssize_t n, i64 pc, list regs_in, unsigned char[:] mem,
             i64[:] tags, int line_shift, int set_shift, Py_ssize_t ways,
             unsigned char[:] pred, int mode, i64 depth, i64 rho, i64 hit_lat,
             i64 miss_lat, i64 alu_lat, i64 fuel):
    cdef Py_ssize_t memsize = mem.shape[0]
    cdef i64 set_mask = (1 << set_shift) - 1
    cdef int tag_shift = line_shift + set_shift
    cdef u32 regs[8]
    cdef i64 ready[8]
    cdef i64 owner[8]
    cdef Py_ssize_t r
    for r in range(8):
        regs[r] = <u32>regs_in[r]
        ready[r] = 0
        owner[r] = -1

    cdef Py_ssize_t cap = 16
    cdef Frame* frames = <Frame*>malloc(cap * sizeof(Frame))
    if frames == NULL:
        raise MemoryError()
    cdef Py_ssize_t head = 0, top = 0, fi
    cdef Frame* f
    cdef i64 next_fid = 0
    cdef list events = []
    cdef list log = []
    cdef i64 max_count = 0, violations = 0, spec_writes = 0
    cdef i64 seq_wait = 0, cycle = 0
    cdef i64 op = OP_HALT, k = 0, a, b, c, rdy, oldest, addr, s, t, youngest
    cdef u32 y, v
    cdef bint issued, budget_ok, actual, predicted, hit, ok, have_frames
    cdef unsigned char ctr

    try:
        while True:
            if cycle >= fuel:
                raise FuelExhausted(f"simulation exceeded {fuel} cycles")

            issued = False
            if pc >= n:
                op = OP_HALT
            else:
                k = pc * ROW
                op = code[k]
            have_frames = top > head
            budget_ok = True
            if have_frames and depth >= 0:
                for fi in range(head, top):
                    if frames[fi].count >= depth:
                        budget_ok = False
                        break
            oldest = frames[head].fid if have_frames else NO_FRAME
            youngest = frames[top - 1].fid if have_frames else -1

            if cycle < seq_wait:
                pass
            elif op == OP_HALT:
                if not have_frames:
                    for r in range(8):
                        regs_in[r] = regs[r]
                    return pc, cycle + 1, events, log, max_count, violations, spec_writes
            elif not budget_ok:
                pass
            elif OP_BLT <= op <= OP_BNZ:
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
                    for fi in range(head, top):
                        frames[fi].count += 1
                    if top == cap:
                        cap *= 2
                        f = <Frame*>realloc(frames, cap * sizeof(Frame))
                        if f == NULL:
                            raise MemoryError()
                        frames = f
                    f = &frames[top]
                    top += 1
                    f.fid = next_fid
                    next_fid += 1
                    f.pc = pc
                    f.predicted = predicted
                    f.actual = actual
                    f.issued = cycle
                    f.resolve_at = (rdy if rdy > cycle else cycle) + rho
                    f.target = code[k + 5]
                    memcpy(f.regs, regs, sizeof(regs))
                    memcpy(f.ready, ready, sizeof(ready))
                    memcpy(f.owner, owner, sizeof(owner))
                    f.count = 0
                    f.fault = -1
                    pc = code[k + 5] if predicted else pc + 1
                    issued = True
            elif op == OP_JMP:
                for fi in range(head, top):
                    frames[fi].count += 1
                pc = code[k + 5]
                issued = True
            elif op == OP_MOV:
                a = code[k + 1]
                regs[a] = <u32>code[k + 4]
                ready[a] = cycle + alu_lat
                owner[a] = youngest
                for fi in range(head, top):
                    frames[fi].count += 1
                pc += 1
                issued = True
            elif op == OP_LD:
                a = code[k + 1]
                b = code[k + 2]
                if b < 0 or (ready[b] <= cycle and not (mode == MODE_A53 and owner[b] >= oldest)):
                    addr = (code[k + 4] + (regs[b] if b >= 0 else 0)) & 0xFFFFFFFF
                    if addr + 4 > memsize:
                        if not have_frames:
                            raise MemoryFault(addr, pc)
                        if frames[top - 1].fault < 0:
                            frames[top - 1].fault = addr
                        regs[a] = 0
                        ready[a] = cycle + 1
                    else:
                        s = (addr >> line_shift) & set_mask
                        t = addr >> tag_shift
                        hit = _access(tags, s, t, ways)
                        events.append((cycle, EV_HIT if hit else EV_FILL, s, t,
                                       have_frames, addr, pc))
                        regs[a] = (<u32>mem[addr] | (<u32>mem[addr + 1] << 8)
                                   | (<u32>mem[addr + 2] << 16) | (<u32>mem[addr + 3] << 24))
                        ready[a] = cycle + (hit_lat if hit else miss_lat)
                    owner[a] = youngest
                    for fi in range(head, top):
                        frames[fi].count += 1
                    pc += 1
                    issued = True
            elif op == OP_ST:
                a = code[k + 1]
                b = code[k + 2]
                if not have_frames and ready[a] <= cycle and (b < 0 or ready[b] <= cycle):
                    addr = (code[k + 4] + (regs[b] if b >= 0 else 0)) & 0xFFFFFFFF
                    if addr + 4 > memsize:
                        raise MemoryFault(addr, pc)
                    s = (addr >> line_shift) & set_mask
                    t = addr >> tag_shift
                    hit = _access(tags, s, t, ways)
                    events.append((cycle, EV_HIT if hit else EV_FILL, s, t, False, addr, pc))
                    v = regs[a]
                    mem[addr] = v & 0xFF
                    mem[addr + 1] = (v >> 8) & 0xFF
                    mem[addr + 2] = (v >> 16) & 0xFF
                    mem[addr + 3] = v >> 24
                    if have_frames:
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
                    regs[a] = _alu(op, regs[b], regs[c] if c >= 0 else <u32>code[k + 4])
                    ready[a] = cycle + alu_lat
                    owner[a] = youngest
                    for fi in range(head, top):
                        frames[fi].count += 1
                    pc += 1
                    issued = True

            if issued and top > head:
                for fi in range(head, top):
                    if frames[fi].count > max_count:
                        max_count = frames[fi].count
                    if depth >= 0 and frames[fi].count > depth:
                        violations += 1

            while top > head and frames[head].resolve_at <= cycle:
                f = &frames[head]
                head += 1
                ctr = pred[f.pc & 0xFF]
                if f.actual:
                    if ctr < 3:
                        pred[f.pc & 0xFF] = ctr + 1
                elif ctr > 0:
                    pred[f.pc & 0xFF] = ctr - 1
                log.append((f.pc, f.issued, cycle, int(f.predicted), int(f.actual)))
                if f.predicted == f.actual:
                    if f.fault >= 0:
                        raise MemoryFault(f.fault)
                else:
                    memcpy(regs, f.regs, sizeof(regs))
                    memcpy(ready, f.ready, sizeof(ready))
                    memcpy(owner, f.owner, sizeof(owner))
                    pc = f.target if f.actual else f.pc + 1
                    head = 0
                    top = 0
                    break
            if head == top:
                head = 0
                top = 0

            cycle += 1
    finally:
        free(frames)
