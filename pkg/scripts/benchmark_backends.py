"""Benchmark the numba kernels against the pure-numpy fallback.

Runs itself twice via subprocess with KINETIC_GAP_BACKEND set, timing the
collision evaluation, a dense operator assembly, and the quadratic
difference functional on a small lattice.

Usage: python scripts/benchmark_backends.py [n] [repeats]
"""

import os
import subprocess
import sys
import time


def run_case(n, repeats):
    import numpy as np
    from kinetic_gap import backend_name, build_angular, build_grid, KernelParams
    from kinetic_gap.backend import kernels
    from kinetic_gap.collision import phi_table
    from kinetic_gap.fields import maxwellian_array

    kp = KernelParams(gamma=1.0, s=0.5, b0=0.1, theta_min=0.05)
    grid = build_grid(6.0, n)
    aq = build_angular(kp, n_theta=4, n_phi=4, nodes_per_panel=2)
    sc, sa1, sa2, wb = aq.sigma_coeffs
    phi_d = phi_table(grid, kp, "full")
    mu3 = maxwellian_array(grid)
    rng = np.random.default_rng(0)
    f = (rng.standard_normal((n, n, n)) * mu3).astype(np.complex128)
    out = np.empty_like(f)
    ones = np.ones_like(f)

    # warm-up (includes JIT compilation on the numba backend)
    kernels.q_bilinear(f / mu3, f / mu3, mu3, True, phi_d, sc, sa1, sa2, wb,
                       grid.h, out)
    t0 = time.perf_counter()
    for _ in range(repeats):
        kernels.q_bilinear(f / mu3, f / mu3, mu3, True, phi_d, sc, sa1, sa2,
                           wb, grid.h, out)
    t_q = (time.perf_counter() - t0) / repeats

    A = np.zeros((n ** 3, n ** 3))
    kernels.assemble_l(mu3, phi_d, sc, sa1, sa2, wb, grid.h, True, True, True, A)
    t0 = time.perf_counter()
    kernels.assemble_l(mu3, phi_d, sc, sa1, sa2, wb, grid.h, True, True, True, A)
    t_a = time.perf_counter() - t0

    kernels.quad_diff(ones, f, phi_d, sc, sa1, sa2, wb, grid.h)
    t0 = time.perf_counter()
    for _ in range(repeats):
        kernels.quad_diff(ones, f, phi_d, sc, sa1, sa2, wb, grid.h)
    t_j = (time.perf_counter() - t0) / repeats

    print(f"backend={backend_name():6s} n={n}  "
          f"q_bilinear {t_q*1e3:9.2f} ms   assemble_l {t_a*1e3:9.2f} ms   "
          f"quad_diff {t_j*1e3:9.2f} ms")


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 8
    repeats = int(sys.argv[2]) if len(sys.argv) > 2 else 3
    if os.environ.get("_KG_BENCH_CHILD"):
        run_case(n, repeats)
        return
    for backend in ("numba", "numpy"):
        env = dict(os.environ)
        env["KINETIC_GAP_BACKEND"] = backend
        env["_KG_BENCH_CHILD"] = "1"
        subprocess.run([sys.executable, os.path.abspath(__file__),
                        str(n), str(repeats)], env=env, check=True)


if __name__ == "__main__":
    main()
