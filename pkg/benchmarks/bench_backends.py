#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run with the default backend to get both columns:

    python3 benchmarks/bench_backends.py

Workloads mirror the hot paths: the performance-gate Verlet run
(chain(64), 1e6 steps), a cavity-bearing trajectory, the hopping RK4
integrator, and the Jacobi eigensolver at oracle-construction sizes.
"""

import sys
import time

import numpy as np

from wavetrap import _kernels
from wavetrap._backend import backend_name
from wavetrap.lattice import (assemble, attach_cavity, build_chain,
                              build_ring, fmo_preset, fmo_target_site)


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def verlet_args(spec, n_steps, stride):
    system = assemble(spec)
    x = np.zeros(system.dimension)
    x[system.dimension // 3] = 1.0
    p = np.zeros(system.dimension)
    return (system.mass_vector, system.onsite, system.edge_i,
            system.edge_j, system.edge_k, x, p, 0.02, n_steps, 0.0,
            stride, False)


def hopping_args(n, n_steps):
    spec = build_chain(n)
    nbrs = [spec.neighbors(i) for i in range(n)]
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(nbrs[i])
    indices = np.concatenate([np.asarray(v, dtype=np.int64) for v in nbrs])
    occ = np.zeros(n)
    occ[n // 2] = 1.0
    return (indptr, indices, 1.0, n // 4, 2.0, occ, 0.02, n_steps, n_steps)


def jacobi_args(n):
    spec = build_chain(n, boundary="fixed_left")
    system = assemble(spec)
    inv = 1.0 / np.sqrt(system.mass_vector)
    a = system.stiffness_matrix * inv[:, None] * inv[None, :]
    return (0.5 * (a + a.T), 60, 1e-14)


WORKLOADS = [
    ("verlet chain(64) 1e6 steps",
     "verlet", verlet_args(build_chain(64), 1_000_000, 1_000_000)),
    ("verlet fmo+cavity 1e5 steps",
     "verlet", verlet_args(attach_cavity(fmo_preset(), fmo_target_site(),
                                         1.0, 1.0), 100_000, 100)),
    ("verlet ring(32)+cavity 2e5 steps",
     "verlet", verlet_args(attach_cavity(build_ring(32), 0, 0.05, 0.05),
                           200_000, 50)),
    ("rk4 hopping chain(256) 5e3 steps",
     "hopping", hopping_args(256, 5_000)),
    ("jacobi eigh D=129", "jacobi", jacobi_args(129)),
    ("jacobi eigh D=257", "jacobi", jacobi_args(257)),
]

FAST = {
    "verlet": _kernels.verlet_trajectory,
    "hopping": _kernels.rk4_hopping,
    "jacobi": _kernels.jacobi_eigh,
}
FALLBACK = {
    "verlet": _kernels._verlet_numpy,
    "hopping": _kernels._rk4_hopping_numpy,
    "jacobi": _kernels._jacobi_eigh_numpy,
}


def main():
    print(f"active backend: {backend_name()}")
    have_numba = backend_name() == "numba"
    if have_numba:
        _kernels.warmup()
        for name, kind, args in WORKLOADS:  # compile every signature
            FAST[kind](*args)
    else:
        print("numba unavailable or disabled: only the numpy column runs")
    header = f"{'workload':38s} {'numpy (s)':>10s}"
    if have_numba:
        header += f" {'numba (s)':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, kind, args in WORKLOADS:
        t_np = best_of(lambda: FALLBACK[kind](*args))
        line = f"{name:38s} {t_np:10.4f}"
        if have_numba:
            t_nb = best_of(lambda: FAST[kind](*args))
            line += f" {t_nb:10.4f} {t_np / t_nb:7.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
