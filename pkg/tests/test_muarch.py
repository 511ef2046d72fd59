
import pytest

from specwindow.cache import CacheState, line_index
from specwindow.config import Mode, ModelConfig
from specwindow.errors import FuelExhausted, MemoryFault
from specwindow.gadgets import load_gadget
from specwindow.harness import attacker_flush, mistrain, plant_secret
from specwindow.isa import ArchState, assemble, run_seq
from specwindow.muarch import simulate
from specwindow.predictor import PredictorState, update_predictor
from specwindow.randprog import random_case

MODES = [Mode.SEQ, Mode.A53, Mode.OOO]
STRAIGHT = """
    MOV R1, 0x100
    LD  R2, [0x40 + R1]
    ADD R3, R2, 7
    ST  R3, [0x200]
    LSL R4, R3, 3
    LD  R5, [0x2000]
    XOR R6, R5, R4
    HALT
"""


@pytest.mark.parametrize("mode", MODES)
def test_straight_line_matches_seq(mode):
    p = assemble(STRAIGHT)
    mem = bytearray(1 << 16)
    mem[0x140:0x144] = (12345).to_bytes(4, "little")
    s0 = ArchState.initial(mem=bytes(mem))
    r = simulate(p, s0, ModelConfig.for_mode(mode), PredictorState(), CacheState())
    ref, _ = run_seq(s0, p, 100)
    assert r.arch == ref
    assert r.trace and not r.trace.speculative()
    assert r.branches == []


def _trained(name, cfg, secret=0x2A):
    g = load_gadget(name)
    mem = plant_secret(g.memory, g, secret)
    pred, cache = mistrain(g, cfg, PredictorState(), CacheState(cfg.geometry),
                           g.training_iterations, mem)
    return g, mem, pred, attacker_flush(g, cache, cfg.geometry.line_size)


def test_spectre_a53_fills_index_line_only(a53_cfg):
    g, mem, pred, _ = _trained("spectre-pht", a53_cfg)
    r0 = g.malicious_inputs[0]
    r = simulate(g.program, g.initial_state(r0, mem), a53_cfg, pred, CacheState())
    spec = r.trace.speculative()
    a_line = line_index(g.symbols["A"] + r0, a53_cfg.geometry)
    assert [(e.kind, e.line) for e in spec] == [("fill", a_line)]
    b = g.monitored_region
    assert not any(b.contains(e.addr) for e in r.trace)


def test_spectre_ooo_fills_probe_line(ooo_cfg):
    g, mem, pred, cache = _trained("spectre-pht", ooo_cfg)
    r0 = g.malicious_inputs[0]
    s0 = g.initial_state(r0, mem)
    r = simulate(g.program, s0, ooo_cfg, pred, cache)
    elem = s0.read_word(g.symbols["A"] + r0)
    target = line_index(g.symbols["B"] + elem, ooo_cfg.geometry)
    assert any(e.kind == "fill" and e.line == target for e in r.trace.speculative())
    assert r.arch == run_seq(s0, g.program, 100)[0]


def test_siscloak2_a53_speculative_probe_then_squash(a53_cfg):
    secret = 0x2A
    g, mem, pred, cache = _trained("siscloak2", a53_cfg, secret)
    s0 = g.initial_state(g.malicious_inputs[0], mem)
    r = simulate(g.program, s0, a53_cfg, pred, cache)
    target = line_index(g.symbols["B"] + secret, a53_cfg.geometry)
    assert any(e.kind == "fill" and e.line == target for e in r.trace.speculative())
    assert any(b.squashed for b in r.branches)
    assert r.arch == run_seq(s0, g.program, 100)[0]


def test_simulate_does_not_mutate_inputs(a53_cfg):
    g, mem, pred, cache = _trained("siscloak1", a53_cfg)
    p_before, c_before = pred.copy(), cache.copy()
    simulate(g.program, g.initial_state(12, mem), a53_cfg, pred, cache)
    assert pred == p_before and cache == c_before


def _random_runs(n, modes=MODES, cfg_kw=None):
    for seed in range(n):
        program, state, pred, cache = random_case(seed)
        for mode in modes:
            cfg = ModelConfig.for_mode(mode, **(cfg_kw or {}))
            yield seed, mode, program, state, pred, cache, simulate(program, state, cfg,
                                                                    pred, cache)


def test_squash_correctness_sample():
    for seed, mode, program, state, _, _, r in _random_runs(200):
        assert r.arch == run_seq(state, program, 100_000)[0], (seed, mode)
        assert r.spec_mem_writes == 0


def test_random_programs_actually_speculate():
    squashes = spec = 0
    for *_, r in _random_runs(100, [Mode.A53]):
        squashes += sum(b.squashed for b in r.branches)
        spec += len(r.trace.speculative())
    assert squashes > 50 and spec > 20


def test_depth_bound_a53():
    for seed, _, _, _, _, _, r in _random_runs(200, [Mode.A53]):
        assert r.max_spec_count <= 2 and r.depth_violations == 0, seed


def test_depth_zero_has_no_speculative_events():
    for seed, _, _, _, _, _, r in _random_runs(200, [Mode.A53], {"spec_depth": 0}):
        assert not r.trace.speculative(), seed
        assert r.max_spec_count == 0


def test_seq_trace_soundness():
    cfg = ModelConfig.for_mode(Mode.SEQ)
    for seed in range(200):
        program, state, pred, cache = random_case(seed)
        r = simulate(program, state, cfg, pred, cache)
        _, events = run_seq(state, program, 100_000)
        assert r.trace.lines() == [line_index(e.addr, cfg.geometry) for e in events]
        assert r.predictor == pred
        assert all(b.predicted is None for b in r.branches)


@pytest.mark.parametrize("mode", [Mode.A53, Mode.OOO])
def test_predictor_replay(mode):
    for *_, pred, _, r in _random_runs(100, [mode]):
        p = pred
        for b in r.branches:
            p = update_predictor(p, b.pc, b.actual)
        assert p == r.predictor


def test_determinism(a53_cfg):
    g, mem, pred, cache = _trained("siscloak1", a53_cfg)
    s0 = g.initial_state(12, mem)
    a = simulate(g.program, s0, a53_cfg, pred, cache)
    b = simulate(g.program, s0, a53_cfg, pred, cache)
    assert a == b


def test_fuel_exhausted(a53_cfg):
    with pytest.raises(FuelExhausted):
        simulate(assemble("x: JMP x"), ArchState.initial(), a53_cfg, PredictorState(),
                 CacheState(), fuel=500)


def test_committed_out_of_image_load_faults(a53_cfg):
    p = assemble("MOV R0, 0x10000\nLD R1, [0 + R0]\nHALT")
    with pytest.raises(MemoryFault):
        simulate(p, ArchState.initial(), a53_cfg, PredictorState(), CacheState())


def test_speculative_out_of_image_load_is_suppressed(ooo_cfg):
    # predicted taken into a body whose load is out of the image, actually not taken
    p = assemble("""
        LD  R1, [0x100]
        BNZ R1, body
        HALT
    body:
        MOV R0, 0x20000
        LD  R2, [0 + R0]
        HALT
    """)
    pred = PredictorState(bytes([3]) * 256)
    r = simulate(p, ArchState.initial(), ooo_cfg, pred, CacheState())
    assert r.branches[0].squashed
    assert all(e.addr < 0x10000 for e in r.trace)


def test_faulting_speculative_load_raises_on_commit(ooo_cfg):
    p = assemble("""
        MOV R1, 1
        LD  R3, [0x100]
        ADD R1, R1, R3
        BNZ R1, body
        HALT
    body:
        MOV R0, 0x20000
        LD  R2, [0 + R0]
        HALT
    """)
    pred = PredictorState(bytes([3]) * 256)
    with pytest.raises(MemoryFault):
        simulate(p, ArchState.initial(), ooo_cfg, pred, CacheState())


def test_stores_wait_for_resolution(ooo_cfg):
    p = assemble("""
        LD  R1, [0x100]
        BZ  R1, skip
        MOV R2, 9
        ST  R2, [0x200]
    skip:
        HALT
    """)
    pred = PredictorState(bytes([0]) * 256)   # predicts fall-through into the store
    mem = bytearray(1 << 16)
    r = simulate(p, ArchState.initial(mem=bytes(mem)), ooo_cfg, pred, CacheState())
    assert r.branches[0].squashed
    assert r.arch.mem == bytes(mem) and r.spec_mem_writes == 0


def test_a53_blocks_forwarding_under_frame(a53_cfg, ooo_cfg):
    # the MOV result is produced under the frame and cannot feed the load in A53
    p = assemble("""
        LD  R1, [0x100]
        BNZ R1, body
        HALT
    body:
        MOV R0, 0x3000
        LD  R2, [0 + R0]
        HALT
    """)
    pred = PredictorState(bytes([3]) * 256)
    a = simulate(p, ArchState.initial(), a53_cfg, pred, CacheState())
    o = simulate(p, ArchState.initial(), ooo_cfg, pred, CacheState())
    assert not any(e.addr == 0x3000 for e in a.trace)
    assert any(e.addr == 0x3000 and e.speculative for e in o.trace)


def test_random_case_is_seeded():
    a, b = random_case(7), random_case(7)
    assert a[0] == b[0] and a[1] == b[1] and a[2] == b[2] and a[3] == b[3]
    assert random_case(8)[0] != a[0] or random_case(8)[1] != a[1]
