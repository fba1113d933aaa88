"""Compare the compiled and pure-Python evaluation kernels.

    python benchmarks/bench_kernels.py [--boxes 200] [--ranks 20000] [--repeat 5]

Checks both backends return identical results, then prints best-of-N timings.
"""
import argparse
import sys
import timeit

import numpy as np

from alharness.eval import backend


def random_boxes(rng, n):
    xy = rng.uniform(0, 500, (n, 2))
    wh = rng.uniform(5, 120, (n, 2))
    return np.ascontiguousarray(np.hstack([xy, xy + wh]))


def workloads(args):
    rng = np.random.default_rng(args.seed)
    dets = random_boxes(rng, args.boxes)
    gts = random_boxes(rng, max(1, args.boxes // 4))
    difficult = (rng.random(len(gts)) < 0.1).astype(np.uint8)
    flags = (rng.random(args.ranks) < 0.4).astype(np.int8)
    n_gt = int(flags.sum()) + 10
    return {
        "iou_matrix": lambda k: k.iou_matrix(dets, gts),
        "match_image": lambda k: k.match_image(dets, gts, difficult, 0.5),
        "ap_all_points": lambda k: k.ap_all_points(flags, n_gt),
        "ap_11pt": lambda k: k.ap_11pt(flags, n_gt),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.dtype == b.dtype and np.array_equal(a, b)
    return a == b


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--boxes", type=int, default=200, help="detections per image")
    parser.add_argument("--ranks", type=int, default=20000, help="length of the tp/fp list for AP")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    py = backend.get("python")
    try:
        cy = backend.get("cython")
    except ImportError:
        print("compiled kernels not built; only the Python backend is available", file=sys.stderr)
        cy = None

    print(f"{'kernel':<15}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}")
    for name, fn in workloads(args).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:<15}{t_py:>14.3f}{'-':>14}{'-':>10}")
            continue
        if not same(fn(py), fn(cy)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<15}{t_py:>14.3f}{t_cy:>14.3f}{t_py / t_cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
