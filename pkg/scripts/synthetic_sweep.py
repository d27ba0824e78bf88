#!/usr/bin/env python3
"""Synthetic protocol: 50 ten-dim subspaces around 5 lines, centers 3..7, 5 trials.

    python scripts/synthetic_sweep.py --noise 0.3 --proto-dim 1 --out-prefix results/synth
"""

import argparse
from pathlib import Path

from subclust import LbgConfig, SynthSpec, synth_generate, sweep
from subclust.lbg import Method, default_threads


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", type=float, default=0.3)
    ap.add_argument("--ambient", type=int, default=25)
    ap.add_argument("--proto-dim", type=int, default=1)
    ap.add_argument("--centers", type=int, nargs="+", default=[3, 4, 5, 6, 7])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--iters", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=default_threads())
    ap.add_argument("--out-prefix", default="results/synth")
    args = ap.parse_args()

    ds = synth_generate(SynthSpec(ambient_dim=args.ambient, noise_level=args.noise, seed=args.seed))
    cfg = LbgConfig(num_centers=args.centers[0], prototype_dim=args.proto_dim,
                    max_outer_iters=args.iters, seed=args.seed)
    report = sweep(ds, list(Method), args.centers, args.trials, cfg, threads=args.threads)

    Path(args.out_prefix).parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(f"{args.out_prefix}.records.csv", f"{args.out_prefix}.medians.csv")
    print(f"{'centers':>8s}" + "".join(f"{m.value:>12s}" for m in Method))
    for c in args.centers:
        print(f"{c:>8d}" + "".join(f"{report.median_purity(m, c):>12.3f}" for m in Method))


if __name__ == "__main__":
    main()
