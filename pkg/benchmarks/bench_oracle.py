"""Compare the compiled and numpy master-equation kernels.

Runs the same oracle integration on each available backend, checks that the
results agree and reports wall time per run.

    python benchmarks/bench_oracle.py --cutoff 20 --repeat 3
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from modescope import kernels
from modescope.dephasing import Drive, Mode
from modescope.oracle import OracleConfig, evolve_dispersive, extract_rate
from modescope.units import TWO_PI, ghz


def run(backend: str, cutoff: int, kappa_times: float, repeat: int):
    mode = Mode(ghz(7.0), TWO_PI * 1e6, TWO_PI * 0.5e6)
    drive = Drive(mode.omega_bare + mode.chi, TWO_PI * 0.2e6)
    config = OracleConfig.for_mode(mode, drive, fock_cutoff=cutoff, kappa_times=kappa_times)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        series = evolve_dispersive(mode, drive, config, backend=backend)
        times.append(time.perf_counter() - start)
    gamma, _ = extract_rate(series, config.transient_fraction)
    steps = int(np.ceil(config.t_max / config.dt))
    return min(times), steps, gamma, series.rho01_abs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cutoff", type=int, default=20)
    parser.add_argument("--kappa-times", type=float, default=40.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    print(f"default backend: {kernels.BACKEND}; available: {', '.join(kernels.AVAILABLE)}")
    results = {}
    for backend in kernels.AVAILABLE:
        best, steps, gamma, coherence = run(backend, args.cutoff, args.kappa_times, args.repeat)
        results[backend] = (best, coherence)
        print(f"{backend:>7}: {best:8.3f} s  ({steps} RK4 steps, {1e6 * best / steps:6.2f} us/step)"
              f"  gamma = {gamma:.6e} 1/s")
    if len(results) == 2:
        (t_c, c_c), (t_p, c_p) = results["cython"], results["python"]
        diff = float(np.max(np.abs(c_c - c_p)))
        print(f"speedup: {t_p / t_c:.1f}x; max |rho01| difference {diff:.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
