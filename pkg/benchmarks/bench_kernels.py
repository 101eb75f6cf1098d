"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N time for each backend and the
speedup. Both backends are imported directly, so ``PANODRAG_PURE_PYTHON``
has no effect here.
"""
import argparse
import math
import timeit

import numpy as np

from panodrag import _kernels_py

try:
    from panodrag import _kernels
except ImportError:
    _kernels = None


def _cases(rng):
    pano = rng.random((512, 1024, 3))
    # a generic rotation's inverse map: every output pixel reads a fractional source position
    j, i = np.meshgrid(np.arange(512.0), np.arange(1024.0), indexing="ij")
    xs = (i + 37.3 + 20 * np.sin(j / 512 * math.pi)) % 1024
    ys = np.clip(j + 11.6 * np.cos(i / 1024 * 2 * math.pi), 0, 511)
    field = rng.random((64, 128, 128))
    ry, rx = np.mgrid[-16:17, -16:17]
    ref = rng.random(128)
    return {
        "bilinear_remap 1024x512x3": ("bilinear_remap", (pano, xs, ys)),
        "nearest_remap 1024x512x3": ("nearest_remap", (pano, xs, ys)),
        "region_l1 33x33 cells, C=128": ("region_l1", (field, ((rx + 5) % 128).ravel(), np.clip(ry + 40, 0, 63).ravel(), ref)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    for label, (name, call_args) in _cases(np.random.default_rng(0)).items():
        row = {}
        for backend, mod in (("python", _kernels_py), ("cython", _kernels)):
            if mod is None:
                continue
            fn = getattr(mod, name)
            row[backend] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
        line = f"{label:<32} python {row['python'] * 1e3:9.2f} ms"
        if "cython" in row:
            line += f"   cython {row['cython'] * 1e3:9.2f} ms   x{row['python'] / row['cython']:.1f}"
        print(line)


if __name__ == "__main__":
    main()
