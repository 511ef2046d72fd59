"""Compare the compiled and pure-Python cycle kernels.

    python3 benchmarks/bench_kernel.py [--repeat N]

Workloads: one long-running loop (kernel-bound), the verdict matrix over
the core gadgets, and a batch of random programs. Results from both kernels
are checked for equality before timings are reported.
"""
import argparse
import time

from specwindow import _kernel_py, checker, muarch
from specwindow.cache import CacheState
from specwindow.config import Mode, ModelConfig
from specwindow.gadgets import CORE_GADGETS, load_gadget
from specwindow.isa import ArchState, assemble
from specwindow.predictor import PredictorState
from specwindow.randprog import random_case

LOOP = """
        MOV R7, {n}
        MOV R6, 0
top:
        AND R1, R6, 0x3FFC
        LD  R2, [0x1000 + R1]
        ADD R3, R3, R2
        BLT R2, R3, skip
        XOR R4, R4, R2
skip:
        ADD R6, R6, 68
        SUB R7, R7, 1
        BNZ R7, top
        HALT
"""


def loop_workload():
    p = assemble(LOOP.format(n=20_000))
    s0 = ArchState.initial()
    cfg = ModelConfig.for_mode(Mode.A53)
    return lambda: muarch.simulate(p, s0, cfg, PredictorState(), CacheState(), fuel=10**7)


def matrix_workload():
    gadgets = [load_gadget(n) for n in CORE_GADGETS]
    cfgs = [ModelConfig.for_mode(m) for m in Mode]
    return lambda: checker.compare_models(gadgets, cfgs).cells


def random_workload():
    cases = [random_case(seed) for seed in range(300)]
    cfg = ModelConfig.for_mode(Mode.OOO)
    return lambda: [muarch.simulate(p, s, cfg, pr, c) for p, s, pr, c in cases]


def timed(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    try:
        from specwindow import _ckernel
    except ImportError:
        raise SystemExit("compiled kernel not built; run `pip install -e .` first")

    kernels = {"cython": _ckernel, "python": _kernel_py}
    print(f"{'workload':<10} {'cython s':>10} {'python s':>10} {'speedup':>8}")
    for name, make in [("loop", loop_workload), ("matrix", matrix_workload),
                       ("random", random_workload)]:
        fn = make()
        times, results = {}, {}
        for kname, mod in kernels.items():
            muarch.kernel = mod
            times[kname], results[kname] = timed(fn, args.repeat)
        if results["cython"] != results["python"]:
            raise SystemExit(f"{name}: kernels disagree")
        print(f"{name:<10} {times['cython']:>10.3f} {times['python']:>10.3f} "
              f"{times['python'] / times['cython']:>7.1f}x")
    muarch.kernel = _ckernel


if __name__ == "__main__":
    main()
