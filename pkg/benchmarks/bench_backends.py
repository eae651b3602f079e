"""Time the hot kernels on both backends.

Runs the projector-transport and split-step propagation kernels over a
Z-block control loop with the numba implementation and with the plain
numpy fallback, then prints per-kernel timings and the speedup.  The
numba path is warmed once before timing so compilation is not counted.

    python3 benchmarks/bench_backends.py --samples 20000 --steps 20000
"""

import argparse
import math
import time

import numpy as np

from holosim import _kernels
from holosim.junction import JunctionParams
from holosim.network import block_generators, path_coefficients, z_layout


def build_workload(samples):
    layout = z_layout(JunctionParams(1.0, 1.0, 0.0), JunctionParams(1.0, 0.6, 0.0))
    g, _ = block_generators(layout)
    t = np.linspace(0.0, 1.0, samples)
    phi1 = 0.5 * math.pi * (1.0 - t)
    phi2 = 0.5 * math.pi * t
    coeffs = path_coefficients(layout, {"J1": phi1, "J2": phi2}, 0.4)
    rng = np.random.default_rng(7)
    psi = rng.normal(size=(g.shape[1], 2)) + 1j * rng.normal(size=(g.shape[1], 2))
    psi /= np.linalg.norm(psi, axis=0)
    return g, coeffs, psi


def time_call(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=20000,
                        help="loop samples for the transport kernel")
    parser.add_argument("--steps", type=int, default=20000,
                        help="time steps for the propagation kernel")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats, best is reported")
    args = parser.parse_args(argv)

    g, transport_coeffs, psi = build_workload(args.samples)
    _, step_coeffs, _ = build_workload(args.steps)
    dt = 0.01

    jobs = {
        "wilson_transport": lambda: _kernels.wilson_transport(
            g, transport_coeffs, -0.2, 1e-6, psi
        ),
        "propagate_steps": lambda: _kernels.propagate_steps(
            g, step_coeffs, dt, psi[:, :1]
        ),
    }

    timings = {}
    results = {}
    for backend in ("numba", "numpy"):
        try:
            _kernels.use_backend(backend)
            _kernels.backend_name()
        except ImportError:
            print(f"{backend}: unavailable, skipped")
            continue
        for name, job in jobs.items():
            job()  # warm up (jit compile on first numba call)
            timings[backend, name], results[backend, name] = time_call(
                job, args.repeats
            )
    _kernels.use_backend(None)

    print(f"{'kernel':<20} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    for name in jobs:
        fast = timings.get(("numba", name))
        plain = timings.get(("numpy", name))
        cols = [
            f"{fast:10.4f}" if fast is not None else f"{'-':>10}",
            f"{plain:10.4f}" if plain is not None else f"{'-':>10}",
        ]
        ratio = f"{plain / fast:8.1f}x" if fast and plain else f"{'-':>9}"
        print(f"{name:<20} {cols[0]} {cols[1]} {ratio}")

    if ("numba", "wilson_transport") in results and ("numpy", "wilson_transport") in results:
        a = results["numba", "wilson_transport"][0]
        b = results["numpy", "wilson_transport"][0]
        dev = float(np.abs(a - b).max())
        print(f"transport backend agreement: {dev:.2e}")


if __name__ == "__main__":
    main()
