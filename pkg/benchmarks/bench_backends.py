#!/usr/bin/env python3
"""Time the compiled kernels against the pure-numpy fallback.

The backend is chosen at import time from the APF_RCBF_NUMBA environment
variable, so each backend runs in its own subprocess; the parent collects
one JSON result line per backend and prints a comparison table.

Workloads:
  grid  -- dense controller sweep over an nx x ny state grid (three packings,
           same sweep the equivalence check uses)
  sim   -- repeated closed-loop rk4 runs of the bundled three-obstacle
           scenario with the lambda=8 tightened filter

Usage:
  python3 benchmarks/bench_backends.py            # full comparison
  python3 benchmarks/bench_backends.py --quick    # smaller sizes
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _worker(grid_n: int, n_sims: int, repeats: int) -> dict:
    t_import = time.perf_counter()
    import apf_rcbf as ar
    from apf_rcbf.verify import equivalence_suite

    scenario = ar.load_scenario(_bundled("fig2_scenario.json"))
    spec = ar.ControllerSpec(
        kind="generalized",
        sigma_sel=ar.SigmaSelector.grad_norm_squared(),
        gamma_sel=ar.GammaSelector.scaled_special(8.0),
    )
    config = ar.SimConfig(dt=0.004, t_max=40.0, goal_tolerance=0.05,
                          integrator="rk4")
    x0 = [-2.0, 0.0]

    # First calls pay the jit compile (or are plain python); time them apart.
    equivalence_suite(scenario, nx=8, ny=8)
    ar.simulate(scenario, spec, config, x0)
    warm = time.perf_counter() - t_import

    grid_best = min(
        _timed(lambda: equivalence_suite(scenario, nx=grid_n, ny=grid_n))
        for _ in range(repeats)
    )
    sim_best = min(
        _timed(lambda: [ar.simulate(scenario, spec, config, x0)
                        for _ in range(n_sims)])
        for _ in range(repeats)
    )
    return {
        "backend": ar.BACKEND,
        "warmup_s": warm,
        "grid_s": grid_best,
        "sim_s": sim_best,
        "grid_n": grid_n,
        "n_sims": n_sims,
    }


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def _bundled(name: str):
    from importlib import resources

    return resources.files("apf_rcbf") / "data" / name


def _spawn(flag: str, args: argparse.Namespace) -> dict:
    env = dict(os.environ, APF_RCBF_NUMBA=flag)
    cmd = [sys.executable, os.path.abspath(__file__), "--worker",
           "--grid-n", str(args.grid_n), "--n-sims", str(args.n_sims),
           "--repeats", str(args.repeats)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(out.stdout.splitlines()[-1])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true",
                        help="smaller sizes for a fast smoke run")
    parser.add_argument("--grid-n", type=int, default=None)
    parser.add_argument("--n-sims", type=int, default=None)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args.grid_n is None:
        args.grid_n = 80 if args.quick else 200
    if args.n_sims is None:
        args.n_sims = 3 if args.quick else 10

    if args.worker:
        print(json.dumps(_worker(args.grid_n, args.n_sims, args.repeats)))
        return 0

    rows = [_spawn("1", args), _spawn("0", args)]
    by = {r["backend"]: r for r in rows}
    if set(by) != {"numba", "numpy"}:
        raise SystemExit(f"expected both backends, got {sorted(by)}")

    print(f"grid sweep: {args.grid_n}x{args.grid_n} states x 3 controllers; "
          f"sim batch: {args.n_sims} closed-loop rk4 runs; "
          f"best of {args.repeats}")
    print(f"{'backend':<8} {'warmup':>10} {'grid':>10} {'sim':>10}")
    for name in ("numba", "numpy"):
        r = by[name]
        print(f"{name:<8} {r['warmup_s']:>9.3f}s {r['grid_s']:>9.3f}s "
              f"{r['sim_s']:>9.3f}s")
    print(f"speedup (numpy/numba): "
          f"grid {by['numpy']['grid_s'] / by['numba']['grid_s']:.1f}x, "
          f"sim {by['numpy']['sim_s'] / by['numba']['sim_s']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
