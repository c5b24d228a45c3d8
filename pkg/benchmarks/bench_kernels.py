"""Time each compiled kernel against its numpy twin.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--resolution 96] [--json out.json]

Compilation happens in a warm-up call before timing starts.
"""

import argparse
import json
import timeit

import numpy as np

from wsurf import _kernels as K
from wsurf import mesh as ms
from wsurf import surface as sf


def cases(resolution):
    m = ms.tessellate(sf.torus_band(), resolution, resolution)
    V, F = m.vertices, m.faces
    ang, cot, area = K.face_data(V, F)
    X = np.random.default_rng(0).normal(size=(len(V), 3))

    def curvatures():
        m.vertices = V  # clears cached geometry, keeps topology
        return ms.vertex_curvatures(m)

    return {
        "rk4_run (2000 steps)": lambda: K.rk4_run([1.0, 0.0, 0.5, 0.1], 0.0, 1e-3, 2000, 1e-8),
        f"face_data ({len(F)} faces)": lambda: K.face_data(V, F),
        "vertex_accumulate": lambda: K.vertex_accumulate(V, F, ang, cot, area, len(V)),
        "cotan_apply (3 columns)": lambda: K.cotan_apply(F, cot, X),
        "vertex_curvatures (end to end)": curvatures,
    }


def best_time(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--resolution", type=int, default=96)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    rows = []
    for name in cases(args.resolution):
        times = {}
        for backend in ("numpy", "numba"):
            K.set_backend(backend)
            times[backend] = best_time(cases(args.resolution)[name], args.repeat)
        rows.append({"kernel": name, **times, "speedup": times["numpy"] / times["numba"]})
    K.set_backend("numba")
    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy [ms]':>11}  {'numba [ms]':>11}  {'speedup':>8}")
    for r in rows:
        print(f"{r['kernel']:<{width}}  {1e3 * r['numpy']:11.3f}  {1e3 * r['numba']:11.3f}  {r['speedup']:7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
