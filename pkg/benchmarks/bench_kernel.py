"""Compare the compiled and pure-Python simplex kernels.

    python benchmarks/bench_kernel.py [--instances 20] [--repeat 3]

Both kernels pivot identically, so the script also checks that they return
the same solutions before timing them.
"""

import argparse
import statistics
import time

import cutlab.bnc as bnc
from cutlab import _kernel
from cutlab.instgen import GenConfig, filter_for_training, gen_facility_location, gen_set_cover, worked_example_2d
from cutlab.lp import solve_lp


def _median_time(fn, repeat):
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def lp_case(insts):
    def make(backend):
        return lambda: [solve_lp(inst, backend=backend) for inst in insts]
    return make


def bnc_case(insts):
    def make(backend):
        def run():
            real = bnc.solve_lp
            bnc.solve_lp = lambda inst, cuts=(), _b=None: real(inst, cuts, backend)
            try:
                return [bnc.solve_bnc(inst) for inst in insts]
            finally:
                bnc.solve_lp = real
        return run
    return make


def main(argv=None):
    ap = argparse.ArgumentParser(description="simplex kernel benchmark")
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernel.BACKEND != "cython":
        print("compiled kernel not built; nothing to compare")
        return 1

    k = args.instances
    cover = gen_set_cover(GenConfig("set_cover", seed=1, count=k, elements=30, sets=50))
    facility = gen_facility_location(GenConfig("facility_location", seed=1, count=max(1, k // 4)))
    small = filter_for_training(gen_set_cover(GenConfig("set_cover", seed=2, count=15 * k, elements=15, sets=25)))[:k]
    for inst in cover + facility:
        assert solve_lp(inst, backend="python") == solve_lp(inst, backend="cython")

    cases = [
        ("worked example LP x200", lp_case([worked_example_2d()] * 200)),
        (f"set cover 30x50 LP x{len(cover)}", lp_case(cover)),
        (f"facility 10x10 LP x{len(facility)}", lp_case(facility)),
        (f"set cover 15x25 B&C x{len(small)}", bnc_case(small)),
    ]
    print(f"{'case':<30}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, make in cases:
        py = _median_time(make("python"), args.repeat)
        cy = _median_time(make("cython"), args.repeat)
        print(f"{name:<30}{py:>12.3f}{cy:>12.3f}{py / cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
