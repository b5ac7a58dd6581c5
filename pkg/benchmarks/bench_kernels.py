"""Compare the compiled and pure-Python learning kernels.

Times a long spontaneous-tremble run and, for the small games, a block of
landing-distribution samples, and checks that both backends produced the
same numbers.

    python3 benchmarks/bench_kernels.py [--steps N] [--samples N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from aspire import kernels
from aspire.games import CommonPoolSpec, NetworkSpec, common_pool, network_formation, stag_hunt
from aspire.learning import LearnerState, Params, TremblePolicy, run
from aspire.markov import estimate_phat


def _time(fn):
    t0 = time.perf_counter()
    out = fn()
    return time.perf_counter() - t0, out


def bench(name, game, params, steps, samples):
    """``samples=0`` skips the landing-distribution part."""
    x0 = LearnerState.pure(game, (0,) * game.n)
    rows = {}
    for backend in sorted(kernels.BACKENDS):
        t_run, res = _time(lambda: run(game, params, TremblePolicy.SPONTANEOUS, x0, steps, 1, backend=backend))
        t_est, ph = (0.0, None)
        if samples:
            t_est, ph = _time(lambda: estimate_phat(game, params, samples, 1, backend=backend))
        rows[backend] = (t_run, t_est, res, ph)
    ref = next(iter(rows.values()))
    same = all(
        r[2].final == ref[2].final and (r[3] is None or np.array_equal(r[3].counts, ref[3].counts))
        for r in rows.values()
    )
    print(f"{name}: {steps} steps, {samples} samples/row x {game.size} rows, identical={same}", flush=True)
    for backend, (t_run, t_est, _, _) in rows.items():
        print(f"  {backend:7s} run {steps / t_run / 1e6:7.3f} Msteps/s   phat {t_est:7.2f} s", flush=True)
    if "cython" in rows and "python" in rows:
        c, p = rows["cython"], rows["python"]
        line = f"  speed-up  run x{p[0] / c[0]:.0f}"
        if samples:
            line += f"   phat x{p[1] / c[1]:.0f}"
        print(line, flush=True)
    return same


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--samples", type=int, default=50)
    args = ap.parse_args(argv)
    sh = stag_hunt()
    ok = bench("stag hunt", sh,
               Params.for_game(sh, epsilon=1e-2, lam=1e-2, zeta=0.05, c_phi=0.2, h=0.01),
               args.steps, args.samples)
    cp = common_pool(CommonPoolSpec(2, (0.0, 0.2), (0.4, 0.3)))
    ok &= bench("common pool 2x2", cp,
                Params.for_game(cp, epsilon=1e-2, lam=1e-2, zeta=0.05, c_phi=0.2, h=0.01),
                args.steps, args.samples)
    # 4096 pure states; the pure-Python landing estimate would take hours
    net = network_formation(NetworkSpec.ring(6, 0.125))
    ok &= bench("ring-6 network", net,
                Params.for_game(net, epsilon=1e-2, lam=1e-2, zeta=0.01, c_phi=0.2, h=0.01),
                args.steps, 0)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
