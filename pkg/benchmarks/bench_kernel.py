"""Timing comparison of the compiled table interpreter vs the fallback.

Three workloads, each run on every available backend:

  tables/connection   Christoffel symbols of the round 3-sphere chart,
                      evaluated entry-wise at many points
  tables/random       a batch of random smooth expressions
  transport/loop      one tractor-bundle loop transport on the round
                      2-sphere (end to end, toggling the default backend)

Usage: python3 benchmarks/bench_kernel.py [--points N] [--steps N]
"""

import argparse
import random
import time

import numpy as np

import protract.kernel as kernel
from protract.expr import Expr, add, const, cos, exp, mul, parse, sin, var
from protract.geometry import ChartGeometry
from protract.kernel import available_backends, eval_table
from protract.program import compile_table
from protract.tensor import TensorField
from protract.transport import circle_loop, loop_matrix, tractor_bundle


def _sphere(dim: int) -> ChartGeometry:
    r2 = " + ".join("x%d^2" % i for i in range(dim))
    f = "4/(1 + %s)^2" % r2
    entries = [f if i == j else "0" for i in range(dim) for j in range(dim)]
    return ChartGeometry(TensorField(dim, 0, 2,
                                     [parse(s, dim) for s in entries]))


def _random_expr(rng: random.Random, dim: int, depth: int) -> Expr:
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return var(rng.randrange(dim))
        return const(rng.randint(-4, 4))
    pick = rng.random()
    a = _random_expr(rng, dim, depth - 1)
    if pick < 0.2:
        return sin(a)
    if pick < 0.3:
        return cos(a)
    if pick < 0.35:
        return exp(mul(const(rng.choice([-1, 1])), a))
    b = _random_expr(rng, dim, depth - 1)
    if pick < 0.6:
        return add(a, b)
    if pick < 0.9:
        return mul(a, b)
    return add(a, mul(const(rng.randint(1, 3)), b))


def _time(f, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_table(name: str, exprs, points, backends) -> None:
    table = compile_table(exprs)
    out = np.empty(table.n_out)
    times = {}
    for backend in backends:
        def run(backend=backend):
            for x in points:
                eval_table(table, x, out=out, backend=backend)
        times[backend] = _time(run)
    _report(name, "%d exprs x %d points" % (len(exprs), len(points)),
            len(exprs) * len(points), times)


def bench_transport(steps: int, backends) -> None:
    bundle = tractor_bundle(_sphere(2))
    loop = circle_loop([0.15, -0.1], 0.5)
    loop_matrix(bundle, loop, steps=64)  # warm caches before timing
    times = {}
    saved = kernel.BACKEND
    try:
        for backend in backends:
            kernel.BACKEND = backend
            times[backend] = _time(
                lambda: loop_matrix(bundle, loop, steps=steps))
    finally:
        kernel.BACKEND = saved
    _report("transport/loop", "%d RK4 steps" % steps, steps, times,
            unit="steps/s")


def _report(name: str, detail: str, units: int, times: dict,
            unit: str = "evals/s") -> None:
    print("%-20s %s" % (name, detail))
    for backend, t in times.items():
        print("    %-9s %8.3f ms   %12.0f %s"
              % (backend, t * 1e3, units / t, unit))
    if "compiled" in times and "python" in times:
        print("    speedup   %8.1fx" % (times["python"] / times["compiled"]))
    print()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args()

    backends = available_backends()
    print("available backends: %s (default %s)\n"
          % (", ".join(backends), kernel.BACKEND))

    rng = random.Random(20260819)
    pts3 = [[rng.uniform(-1, 1) for _ in range(3)] for _ in range(args.points)]

    geom = _sphere(3)
    bench_table("tables/connection", list(geom.connection().gamma),
                pts3, backends)
    bench_table("tables/random",
                [_random_expr(rng, 3, depth=4) for _ in range(60)],
                pts3[: args.points // 4], backends)
    bench_transport(args.steps, backends)


if __name__ == "__main__":
    main()
