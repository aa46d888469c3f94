"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--csv out.csv]
"""

from __future__ import annotations

import argparse
import csv
import sys
import timeit

import numpy as np

from latentprm import cae, mlp
from latentprm.geometry import collide, generate_workspace, get_robot, validate_edge
from latentprm.kernels import backend_module
from latentprm.samplers import CSpace

CASES = [("point2d", "2DS"), ("boxchain7", "3DC"), ("boxchain8", "3DO")]


def best_of(fn, repeat: int, number: int) -> float:
    """Seconds per call, best of ``repeat`` batches of ``number`` calls."""
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def run(repeat: int):
    py = backend_module("python")
    try:
        cy = backend_module("cython")
    except ImportError:
        sys.exit("compiled kernels are not built; reinstall with Cython available")
    rows = []
    for tag, wclass in CASES:
        robot = get_robot(tag)
        ws = generate_workspace(wclass, 0)
        cs = CSpace(robot, ws.extents)
        Q = cs.uniform(np.random.default_rng(0), 200)
        A, B = Q[:50], Q[:50] + 0.05 * (Q[50:100] - Q[:50])
        for name, fn in (
            ("collide x200", lambda mod: [collide(robot, q, ws, backend=mod) for q in Q]),
            ("edge x50", lambda mod: [validate_edge(robot, a, b, ws, backend=mod) for a, b in zip(A, B)]),
        ):
            number = 3
            t_py = best_of(lambda: fn(py), repeat, number)
            t_cy = best_of(lambda: fn(cy), repeat, number)
            rows.append((f"{tag}/{wclass}", name, t_py, t_cy))
        latent = cae.ARCHITECTURES[wclass][-1]
        model = mlp.build_mlp(wclass, robot, latent, 0).frozen()
        z = np.zeros(latent)
        for n in (1, 100, 1000):
            gp = mlp.GateEvaluator(model, z, robot, ws.extents, backend=py)
            gc = mlp.GateEvaluator(model, z, robot, ws.extents, backend=cy)
            Qn = cs.uniform(np.random.default_rng(1), n)
            number = max(3, 3000 // n)
            rows.append((f"{tag}/{wclass}", f"gate x{n}", best_of(lambda: gp(Qn), repeat, number),
                         best_of(lambda: gc(Qn), repeat, number)))
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    rows = run(args.repeat)
    print(f"{'case':<16} {'kernel':<14} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for case, name, t_py, t_cy in rows:
        print(f"{case:<16} {name:<14} {1e3 * t_py:12.3f} {1e3 * t_cy:12.3f} {t_py / t_cy:8.1f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["case", "kernel", "python_s", "cython_s", "speedup"])
            for case, name, t_py, t_cy in rows:
                w.writerow([case, name, repr(t_py), repr(t_cy), repr(t_py / t_cy)])
    return 0


if __name__ == "__main__":
    sys.exit(main())
