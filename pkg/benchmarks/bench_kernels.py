"""Compare the compiled and numpy kernel backends on a synthetic scene.

    python benchmarks/bench_kernels.py [--width 640 --height 480 --repeat 5 --threads N]

Prints one line per kernel and backend with the best-of-N wall time.
"""
import argparse
import os
import time

import numpy as np

from loomkit import MotionState, PlanarPatch, patch_normal
from loomkit.flow import _backend
from loomkit.flow.pipeline import rigid_motion_matrix


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=640)
    ap.add_argument("--height", type=int, default=480)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    w, h = args.width, args.height
    fx = fy = 0.9 * w
    cx, cy = (w - 1) / 2, (h - 1) / 2
    plane = PlanarPatch((12, 0, 0), (12.5, 1, 0), (12, 0, 1))
    n = patch_normal(plane)
    offset = float(n @ plane.a)
    motion = rigid_motion_matrix(MotionState((1.5, 0.2, -0.1), (0.05, -0.1, 0.2)), 1 / 30)

    backends = {"python": _backend.get("python")}
    if _backend.compiled is not None:
        backends["cython"] = _backend.compiled
    else:
        print("compiled kernels not built; timing the numpy backend only")

    results = {}
    for name, k in backends.items():
        nt = args.threads if name == "cython" else 1
        u, v, ok = k.synth_flow_grid(n, offset, motion, fx, fy, cx, cy, w, h, nt)
        rates = k.rates_from_flow(u, v, ok, fx, fy, cx, cy, 1 / 30, nt)
        th, ph, td, pd, rok = rates
        jac = k.jacobian_partials(th, ph, td, pd, rok, nt)
        cases = {
            "synth_flow_grid": lambda: k.synth_flow_grid(n, offset, motion, fx, fy, cx, cy, w, h, nt),
            "rates_from_flow": lambda: k.rates_from_flow(u, v, ok, fx, fy, cx, cy, 1 / 30, nt),
            "jacobian_partials": lambda: k.jacobian_partials(th, ph, td, pd, rok, nt),
            "axis_partials": lambda: k.axis_partials(th, ph, td, pd, rok, nt),
            "looming_grid": lambda: k.looming_grid(ph, pd, jac[0], jac[1], jac[4], jac[4], 2, nt),
        }
        for case, fn in cases.items():
            results[(case, name)] = best_of(fn, args.repeat)

    print(f"{w}x{h}, best of {args.repeat}, compiled threads={args.threads}")
    print(f"{'kernel':<20}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for case in dict.fromkeys(c for c, _ in results):
        py = results[(case, "python")] * 1e3
        cy_ = results.get((case, "cython"))
        if cy_ is None:
            print(f"{case:<20}{py:>12.2f}{'-':>12}{'-':>10}")
        else:
            print(f"{case:<20}{py:>12.2f}{cy_ * 1e3:>12.2f}{py / (cy_ * 1e3):>9.1f}x")


if __name__ == "__main__":
    main()
