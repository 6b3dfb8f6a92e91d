#!/usr/bin/env python3
"""Compare the numba-compiled kernels against the pure NumPy fallback.

The backend is chosen at import time from KERRSHADOW_PURE_NUMPY, so this
script re-runs itself in a subprocess per backend and reports wall times for
a ray-integration batch and a small render. Usage:

    python benchmarks/compare_backends.py [--size 48] [--rays 200]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def worker(size: int, rays: int) -> dict:
    import math

    import numpy as np

    from kerrshadow import backend_name
    from kerrshadow.geodesics import IntegratorControls, integrate_raw, state_from_integrals
    from kerrshadow.kerr import KerrParams
    from kerrshadow.observer import ObserverSpec
    from kerrshadow.raytracer import ImagePlane, SceneConfig, render

    params = KerrParams(0.97)
    obs = ObserverSpec(params, 5.0, math.pi / 2, 0.0)
    controls = IntegratorControls(store_every=1_000_000)

    # warm-up triggers compilation on the numba backend
    st, c = state_from_integrals(10.0, math.pi / 2, -0.6, 1.0, params)
    t0 = time.perf_counter()
    integrate_raw(st, c, params, controls)
    warmup_ray = time.perf_counter() - t0

    rng = np.random.default_rng(42)
    jobs = []
    while len(jobs) < rays:
        lam = rng.uniform(-6, 6)
        eta = rng.uniform(0.0, 28.0)
        try:
            jobs.append(state_from_integrals(10.0, rng.uniform(0.5, 2.6),
                                             lam, eta, params))
        except ValueError:
            continue
    t0 = time.perf_counter()
    for st, c in jobs:
        integrate_raw(st, c, params, controls)
    t_rays = time.perf_counter() - t0

    plane = ImagePlane(size, size, 2.5)
    scene = SceneConfig()
    t0 = time.perf_counter()
    render(obs, scene, plane, controls=controls)
    warmup_render = time.perf_counter() - t0
    t0 = time.perf_counter()
    res = render(obs, scene, plane, controls=controls)
    t_render = time.perf_counter() - t0

    return {
        "backend": backend_name(),
        "rays": rays,
        "t_rays": t_rays,
        "size": size,
        "t_render": t_render,
        "warmup_ray": warmup_ray,
        "warmup_render": warmup_render,
        "black_pixels": int(res.counters["horizon_or_trapped"]),
    }


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=48)
    ap.add_argument("--rays", type=int, default=200)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        print(json.dumps(worker(args.size, args.rays)))
        return 0

    results = {}
    for flag in ("0", "1"):
        env = dict(os.environ, KERRSHADOW_PURE_NUMPY=flag)
        out = subprocess.run(
            [sys.executable, __file__, "--worker", "--size", str(args.size),
             "--rays", str(args.rays)],
            env=env, capture_output=True, text=True, check=True)
        rec = json.loads(out.stdout.strip().splitlines()[-1])
        results[rec["backend"]] = rec

    nb, np_ = results.get("numba"), results.get("numpy")
    print(f"{'':14s}{'numba':>12s}{'numpy':>12s}{'speedup':>10s}")
    for label, key in ((f"{args.rays} rays", "t_rays"),
                       (f"{args.size}x{args.size} render", "t_render")):
        t1, t2 = nb[key], np_[key]
        print(f"{label:14s}{t1:12.3f}{t2:12.3f}{t2 / t1:10.1f}x")
    if nb["black_pixels"] != np_["black_pixels"]:
        print("warning: backends disagree on the black-pixel count")
    print(f"(numba warm-up: ray {nb['warmup_ray']:.2f} s, "
          f"render {nb['warmup_render']:.2f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
