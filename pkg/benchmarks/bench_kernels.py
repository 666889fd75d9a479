"""Numba against numpy for the assembly and heat-sum kernels.

Per-kernel timings run in-process on the inputs the bundled systems produce.
The heat-sum loop is timed too although the package dispatches heat sums to
numpy under both backends. The end-to-end assembly is timed in fresh interpreters with
``HORMANDER_NUMBA`` set to 1 and 0, so JIT compilation shows up as a separate
first-call cost.

    python benchmarks/bench_kernels.py --system grushin2d --resolution 192
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np
import scipy.sparse as sp

from hormander import _kernels, systems
from hormander.assemble import _row_candidates, discretize_field
from hormander.geometry import build_grid, lattice_points

END_TO_END = """
import json, sys, time
t0 = time.perf_counter()
from hormander import _kernels, systems
from hormander.assemble import assemble_operator
from hormander.geometry import build_grid
b = systems.bundled(sys.argv[1])
grid = build_grid(b.domain, int(sys.argv[2]))
t1 = time.perf_counter()
assemble_operator(b.system, grid)
t2 = time.perf_counter()
assemble_operator(b.system, grid)
t3 = time.perf_counter()
print(json.dumps({"backend": _kernels.backend(), "import": t1 - t0, "first": t2 - t1, "warm": t3 - t2}))
"""


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_inputs(name: str, resolution: int):
    b = systems.bundled(name)
    grid = build_grid(b.domain, resolution)
    Gs = [discretize_field(f, grid).matrix.tocsr() for f in b.system.fields]
    G = Gs[-1]
    cand = _row_candidates(grid)
    X = lattice_points(grid.spec, grid.resolution)[1][cand]
    coef = np.stack([a.evaluate_array(X) for a in b.system.fields[-1].components], axis=1)
    trip = _kernels.NUMPY_KERNELS["gram_triplets"](G.indptr.astype(np.int64), G.indices.astype(np.int64), G.data)
    rows, cols, vals = trip
    order = np.lexsort((cols, rows))
    key = rows[order] * grid.size + cols[order]
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    rng = np.random.default_rng(0)
    lam = np.sort(rng.uniform(1, 1e4, 1000))
    weights = rng.uniform(0, 2, (64, 1000))
    t = np.geomspace(1e-4, 1e-1, 40)
    return {
        "stencil_rows": (cand.astype(np.int64), grid.index, grid.strides, coef, 1.0 / grid.spacing),
        "gram_triplets": (G.indptr.astype(np.int64), G.indices.astype(np.int64), G.data),
        "segment_sums": (np.ascontiguousarray(vals[order]), starts),
        "heat_sums": (lam, weights, t),
    }, grid.size


def _max_diff(a, b) -> float:
    if isinstance(a, tuple):
        # triplets may come out in a different order; compare the matrices they define
        n = int(max(a[0].max(), a[1].max(), b[0].max(), b[1].max())) + 1
        A = sp.csr_matrix((a[2], (a[0], a[1])), shape=(n, n))
        B = sp.csr_matrix((b[2], (b[0], b[1])), shape=(n, n))
        return float(abs(A - B).max())
    return float(np.max(np.abs(a - b)))


def bench_kernels(name: str, resolution: int, repeat: int) -> list[dict]:
    inputs, size = kernel_inputs(name, resolution)
    out = []
    for key, args in inputs.items():
        row = {"kernel": key, "nodes": size, "numpy": _best(lambda: _kernels.NUMPY_KERNELS[key](*args), repeat)}
        if key in _kernels.JIT_KERNELS:
            fast = _kernels.JIT_KERNELS[key]
            fast(*args)  # compile outside the timing
            row["numba"] = _best(lambda: fast(*args), repeat)
            row["max_abs_diff"] = _max_diff(fast(*args), _kernels.NUMPY_KERNELS[key](*args))
        out.append(row)
    return out


def bench_end_to_end(name: str, resolution: int) -> list[dict]:
    out = []
    for flag in ("1", "0"):
        env = dict(os.environ, HORMANDER_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", END_TO_END, name, str(resolution)], env=env,
                             capture_output=True, text=True, check=True)
        out.append(json.loads(res.stdout))
    return out


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--system", default="grushin2d", choices=sorted(systems.BUNDLED))
    p.add_argument("--resolution", type=int, default=192)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", action="store_true", help="print raw results as JSON")
    args = p.parse_args(argv)

    kernels = bench_kernels(args.system, args.resolution, args.repeat)
    e2e = bench_end_to_end(args.system, args.resolution)
    if args.json:
        print(json.dumps({"kernels": kernels, "assembly": e2e}, indent=2))
        return
    print(f"{args.system}, resolution {args.resolution}, {kernels[0]['nodes']} interior nodes")
    print(f"{'kernel':<15}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}{'max diff':>10}")
    for r in kernels:
        nb = r.get("numba")
        speed = f"{r['numpy'] / nb:8.1f}x" if nb else "      n/a"
        nb_s = f"{1e3 * nb:12.2f}" if nb else f"{'n/a':>12}"
        diff = f"{r['max_abs_diff']:10.1e}" if "max_abs_diff" in r else f"{'':>10}"
        print(f"{r['kernel']:<15}{1e3 * r['numpy']:12.2f}{nb_s}{speed}{diff}")
    print()
    print(f"{'assembly':<15}{'import [s]':>12}{'first [s]':>12}{'warm [s]':>10}")
    for r in e2e:
        print(f"{r['backend']:<15}{r['import']:12.2f}{r['first']:12.2f}{r['warm']:10.2f}")


if __name__ == "__main__":
    main()
