"""Time the compiled hot loops against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each case runs both backends on identical inputs, checks they agree, and
reports the best wall time of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from emrestore import _pykernels

try:
    from emrestore import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    img = rng.random((512, 512))
    batch = rng.random((8, 80, 80, 16)).astype(np.float32)
    cols1 = _pykernels.im2col(batch, 3, 1)
    cols2 = _pykernels.im2col(batch, 3, 2)
    weights = (rng.normal(size=(3 * 3 * 16, 32)) * 0.1).astype(np.float32)
    for w in (3, 7, 11):
        k = rng.random((w, w))
        yield f"correlate_valid 512x512 w={w}", lambda m, k=k: m.correlate_valid(img, k)
    yield "im2col 8x80x80x16 stride 1", lambda m: m.im2col(batch, 3, 1)
    yield "im2col 8x80x80x16 stride 2", lambda m: m.im2col(batch, 3, 2)
    yield "col2im 8x80x80x16 stride 1", lambda m: m.col2im(cols1, batch.shape, 3, 1)
    yield "col2im 8x80x80x16 stride 2", lambda m: m.col2im(cols2, batch.shape, 3, 2)
    yield "conv layer fwd+bwd 8x80x80 16->32", lambda m: _conv_step(m, batch, weights)


def _conv_step(m, x, weights):
    cols = m.im2col(x, 3, 1)
    out = cols.reshape(-1, cols.shape[-1]) @ weights
    dcols = (out @ weights.T).reshape(cols.shape)
    return m.col2im(dcols, x.shape, 3, 1)


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write the results to this file")
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'case':40s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng):
        a, b = fn(_pykernels), fn(_ckernels)
        np.testing.assert_allclose(a, b, rtol=1e-5, atol=1e-4)
        py = best_time(lambda: fn(_pykernels), args.repeat)
        cy = best_time(lambda: fn(_ckernels), args.repeat)
        rows.append({"case": name, "python_s": py, "cython_s": cy, "speedup": py / cy})
        print(f"{name:40s} {py * 1e3:10.2f} {cy * 1e3:10.2f} {py / cy:7.2f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
