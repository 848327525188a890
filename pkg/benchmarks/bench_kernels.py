"""Compare the numba and numpy kernel backends on German-Credit-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]

Kernel timings call both implementations directly in one process. With
``--end-to-end`` a short attack run is also timed in two subprocesses, one
with ``FRAUDADV_DISABLE_NUMBA=1``.
"""

import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from fraudadv import harness, ingest, kernels
from fraudadv.datasets import german_data_path, german_schema_path
from fraudadv.schema import load_schema


def german_setup():
    schema = load_schema(german_schema_path())
    records = ingest.read_records(german_data_path(), schema, space_separated=True)
    return harness.build_setup(records, schema, split_seed=0)


def cases(setup, rng):
    schema = setup.schema
    flat = setup.model._flat
    X = setup.X_test[rng.integers(len(setup.X_test), size=4096)]
    noisy = X + rng.normal(scale=0.4, size=X.shape)
    starts, sizes = schema.group_bounds
    kind = schema.kind_codes
    p = rng.uniform(0.05, 0.95, len(setup.pool))
    y = rng.integers(0, 2, len(setup.pool)).astype(float)
    g, h = p - y, p * (1 - p)
    pool = np.ascontiguousarray(setup.pool)
    return [
        ("sum_leaves  4096x61, 100 trees", kernels._sum_leaves_jit, kernels._sum_leaves_np, (*flat, X)),
        ("best_split  560x61", kernels._best_split_jit, kernels._best_split_np, (pool, g, h, 1.0, 1.0)),
        ("project     4096x61", kernels._project_jit, kernels._project_np, (noisy, kind, starts, sizes)),
        ("violations  4096x61", kernels._violations_jit, kernels._violations_np, (noisy, kind, starts, sizes)),
    ]


def bench_kernels(repeat: int) -> None:
    if not kernels.HAVE_NUMBA:
        sys.exit("numba is not importable (or FRAUDADV_DISABLE_NUMBA is set); nothing to compare")
    rng = np.random.default_rng(0)
    setup = german_setup()
    print(f"{'kernel':34s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, fast, slow, args in cases(setup, rng):
        fast(*args)  # compile (or load from cache) outside the timing
        t_fast = min(timeit.repeat(lambda: fast(*args), number=1, repeat=repeat))
        t_slow = min(timeit.repeat(lambda: slow(*args), number=1, repeat=repeat))
        print(f"{name:34s} {1e3 * t_fast:10.3f} {1e3 * t_slow:10.3f} {t_slow / t_fast:7.1f}x")


_E2E = """
from fraudadv import harness, ingest
from fraudadv.datasets import german_data_path, german_schema_path
from fraudadv.schema import load_schema
s = load_schema(german_schema_path())
setup = harness.build_setup(ingest.read_records(german_data_path(), s, space_separated=True), s)
t = harness.select_targets(setup.clf, setup.X_test, setup.y_test)[:10]
cfg = harness.ExperimentConfig(5, ("zoo", "hopskipjump"), {"max_iters": 100, "max_queries": 10000})
harness.run_experiment(cfg, setup, targets=t)
"""


def bench_end_to_end() -> None:
    for label, disable in (("numba", False), ("numpy", True)):
        env = dict(os.environ)
        env.pop("FRAUDADV_DISABLE_NUMBA", None)
        if disable:
            env["FRAUDADV_DISABLE_NUMBA"] = "1"
        t0 = time.perf_counter()
        subprocess.run([sys.executable, "-c", _E2E], env=env, check=True)
        print(f"end-to-end (train + 10 targets x 2 attacks) {label:6s} {time.perf_counter() - t0:7.2f} s")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if args.end_to_end:
        bench_end_to_end()


if __name__ == "__main__":
    main()
