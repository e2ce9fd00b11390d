"""Compiled vs pure-Python CI-test kernels.

    python benchmarks/bench_kernels.py [--repeats N]

Times raw partial-correlation calls for several conditioning-set sizes and a
full FCI search on the Titanic encodings with each backend.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from dualcausal import _backend, load_csv, load_schema
from dualcausal.discovery import BackgroundKnowledge, MatrixTest, fci_search
from dualcausal.pipeline import PipelineConfig, run_dual_discovery
from dualcausal.stats import PIVOT_TOL, correlation_from_covariance

DATA = Path(__file__).resolve().parents[1] / "data"


def time_kernel(kernels, corr, k, calls):
    corr_in = corr.tolist() if kernels is _backend.python_kernels else corr
    rng = np.random.default_rng(k)
    idxs = [np.array(rng.permutation(corr.shape[0])[: k + 2], dtype=np.int64) for _ in range(calls)]
    t0 = time.perf_counter()
    for idx in idxs:
        r, _ = kernels.partial_corr(corr_in, idx, PIVOT_TOL)
        kernels.fisher_z(r, 1000, k)
    return (time.perf_counter() - t0) / calls


def time_fci(backend, matrices, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for m in matrices.values():
            fci_search(MatrixTest(m, 0.01, backend=backend), 0.01, BackgroundKnowledge(m.outcome_name))
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--calls", type=int, default=20000)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if _backend.compiled_kernels is not None else [])
    rng = np.random.default_rng(0)
    a = rng.normal(size=(16, 40))
    corr = correlation_from_covariance(a @ a.T)

    print(f"{'kernel call':<24}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for k in (0, 1, 2, 4, 8):
        t = [time_kernel(_backend.get(b), corr, k, args.calls) for b in backends]
        speed = f"{t[0] / t[-1]:>9.1f}x" if len(t) > 1 else ""
        print(f"{'|S| = ' + str(k):<24}" + "".join(f"{x * 1e6:>12.2f}us" for x in t) + speed)

    table = load_csv(DATA / "titanic.csv", load_schema(DATA / "titanic_schema.json"))
    run = run_dual_discovery(table, PipelineConfig("Survived"))
    t = [time_fci(b, run.matrices, args.repeats) for b in backends]
    speed = f"{t[0] / t[-1]:>9.1f}x" if len(t) > 1 else ""
    print(f"{'Titanic dual FCI':<24}" + "".join(f"{x * 1e3:>12.2f}ms" for x in t) + speed)


if __name__ == "__main__":
    main()
