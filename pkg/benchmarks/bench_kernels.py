"""Time the compiled kernels against the pure-numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--langevin-steps N] [--gillespie-t T]

Each kernel is warmed up once (so numba compilation is excluded) and then
timed over ``--repeat`` runs; the best time is reported together with the
throughput and the numba speed-up.
"""
from __future__ import annotations

import argparse
import time

from laserstats.device import PRESETS, threshold_current
from laserstats.noise import noise_threshold_photon
from laserstats.oracle import GillespieConfig, default_langevin_config, simulate_gillespie, simulate_langevin


def best_of(func, repeat):
    func()
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = func()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--langevin-steps", type=int, default=2_000_000)
    parser.add_argument("--gillespie-t", type=float, default=200.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    ref = PRESETS["reference"]
    n_half = noise_threshold_photon(ref)
    lconfig = default_langevin_config(ref, n_half, n_steps=args.langevin_steps, seed=1)
    toy = PRESETS["toy-a"]
    j = 5.0 * threshold_current(toy)
    gconfig = GillespieConfig(args.gillespie_t, 0.0, seed=1)

    print(f"{'kernel':<10} {'backend':<7} {'best s':>9} {'throughput':>16} {'speed-up':>9}")
    for label, run, unit in (
        ("langevin", lambda b: simulate_langevin(ref, n_half, lconfig, backend=b), "steps"),
        ("gillespie", lambda b: simulate_gillespie(toy, j, gconfig, backend=b), "events"),
    ):
        timings = {}
        for backend in ("numba", "numpy"):
            seconds, result = best_of(lambda: run(backend), args.repeat)
            count = lconfig.n_steps if unit == "steps" else result.events
            timings[backend] = seconds
            speed = timings["numpy"] / timings["numba"] if backend == "numpy" else 1.0
            print(f"{label:<10} {backend:<7} {seconds:9.3f} {count / seconds:10.3g} {unit:<5} {speed:8.1f}x")


if __name__ == "__main__":
    main()
