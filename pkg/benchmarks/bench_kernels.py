#!/usr/bin/env python3
"""Throughput comparison of the execution kernels.

Runs the same workloads on the compiled kernel (when built), the pure-Python
batch kernel, and the reference stepper, and reports cycles per second.

    python benchmarks/bench_kernels.py [--budget 2000000]
"""

import argparse
import time

from pdkkit.isa import ExtensionSet
from pdkkit.lowering import gen_atomic_flag, gen_bcd_u16_to_dec
from pdkkit.sim import KERNEL_NAME, RunConfig, load


def bench_bcd(kernel: str, values: int) -> tuple[int, float]:
    seq = gen_bcd_u16_to_dec(ExtensionSet.of("da"))
    m = load(seq.assemble(), RunConfig(max_cycles=100_000))
    cycles = 0
    t0 = time.perf_counter()
    for v in range(values):
        m.reset()
        m.poke(0x10, v & 0xFF, (v >> 8) & 0xFF)
        r = m.run(kernel=kernel)
        cycles += r.cycle
    return cycles, time.perf_counter() - t0


def bench_atomic(kernel: str, budget: int) -> tuple[int, float]:
    # drivers finish their iterations, then spin until the budget runs out
    fx = gen_atomic_flag("test_and_set", 2, iterations=255)
    m = fx.machine(max_cycles=budget)
    t0 = time.perf_counter()
    r = m.run(kernel=kernel)
    return r.cycle, time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--budget", type=int, default=2_000_000,
                    help="cycle budget for the straight-line workload")
    ap.add_argument("--bcd-values", type=int, default=4096,
                    help="number of conversions in the BCD workload")
    args = ap.parse_args()

    kernels = ["stepper", "pure"]
    if KERNEL_NAME == "compiled":
        kernels.append("compiled")
    print(f"default kernel: {KERNEL_NAME}")
    print(f"{'workload':<22} {'kernel':<9} {'cycles':>10} {'seconds':>8} {'Mcyc/s':>8}")
    base: dict[str, float] = {}
    for name, fn, arg in (
        ("two-lock drivers", bench_atomic, args.budget),
        ("bcd conversions", bench_bcd, args.bcd_values),
    ):
        for kernel in kernels:
            cycles, dt = fn(kernel, arg)
            rate = cycles / dt / 1e6 if dt else float("inf")
            print(f"{name:<22} {kernel:<9} {cycles:>10} {dt:>8.2f} {rate:>8.2f}")
            if kernel == "pure":
                base[name] = rate
            elif kernel == "compiled" and name in base and base[name]:
                print(f"{'':<22} {'speedup':<9} {rate / base[name]:>27.1f}x")


if __name__ == "__main__":
    main()
