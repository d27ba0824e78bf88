#!/usr/bin/env python3
"""MNIST protocol: digits {0,2,4,6} grouped into 784x10 subspaces, centers 2..15.

Needs the IDX files locally (train-images-idx3-ubyte, train-labels-idx1-ubyte,
optionally gzipped); nothing is downloaded.

    python scripts/mnist_sweep.py --images train-images-idx3-ubyte \
        --labels train-labels-idx1-ubyte --out-prefix results/mnist
"""

import argparse
import logging
import time
from pathlib import Path

from subclust import LbgConfig, group_into_subspaces, load_idx_images, sweep
from subclust.lbg import Method, default_threads


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--images", required=True)
    ap.add_argument("--labels", required=True)
    ap.add_argument("--classes", type=int, nargs="+", default=[0, 2, 4, 6])
    ap.add_argument("--group", type=int, default=10)
    ap.add_argument("--limit", type=int, default=None, help="use only the first N images")
    ap.add_argument("--centers", type=int, nargs="+", default=list(range(2, 16)))
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--iters", type=int, default=7)
    ap.add_argument("--proto-dim", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=default_threads())
    ap.add_argument("--out-prefix", default="results/mnist")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    X, y = load_idx_images(args.images, args.labels)
    if args.limit:
        X, y = X[: args.limit], y[: args.limit]
    ds = group_into_subspaces(X, y, args.group, args.classes, seed=args.seed, name="mnist")
    print(f"{len(ds)} subspace samples of shape {ds.ambient_dim}x{args.group}")

    cfg = LbgConfig(num_centers=args.centers[0], prototype_dim=args.proto_dim,
                    max_outer_iters=args.iters, seed=args.seed)
    t0 = time.perf_counter()
    report = sweep(ds, list(Method), args.centers, args.trials, cfg, threads=args.threads)
    print(f"sweep took {time.perf_counter() - t0:.0f} s")

    Path(args.out_prefix).parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(f"{args.out_prefix}.records.csv", f"{args.out_prefix}.medians.csv")
    print(f"{'centers':>8s}" + "".join(f"{m.value:>12s}" for m in Method))
    for c in args.centers:
        print(f"{c:>8d}" + "".join(f"{report.median_purity(m, c):>12.3f}" for m in Method))


if __name__ == "__main__":
    main()
