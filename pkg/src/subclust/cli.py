"""Command-line front end: generate, ingest, cluster, sweep.

Exit codes: 0 success, 1 pipeline failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import json
import logging
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    SubspaceDataset,
    SynthSpec,
    group_into_subspaces,
    load_dataset,
    load_idx_images,
    load_matrix_dataset,
    save_dataset,
    synth_generate,
)
from .errors import SubclustError
from .lbg import InitStrategy, LbgConfig, Method, default_threads, lbg_cluster
from .metrics import SweepFailed, purity, sweep

log = logging.getLogger("subclust")


class UsageError(Exception):
    pass


def parse_int_list(text: str) -> list:
    """'3,4,5' or '2..15' (or a mix) -> sorted-as-given list of positive ints."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            raise UsageError(f"empty item in list {text!r}")
        try:
            if ".." in part:
                a, b = part.split("..")
                a, b = int(a), int(b)
                if a > b:
                    raise UsageError(f"empty range {part!r}")
                out.extend(range(a, b + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"malformed list item {part!r}") from None
    return out


def _positive_list(text):
    vals = parse_int_list(text)
    if any(v < 1 for v in vals):
        raise UsageError(f"values must be positive: {text!r}")
    return vals


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_manifest(path, argv, config: dict, seed, outputs):
    manifest = {
        "command_line": shlex.join(["subclust", *argv]),
        "config": _jsonable(config),
        "artifact_version": __version__,
        "seed": seed,
        "outputs": [str(p) for p in outputs],
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _threads(args):
    return args.threads if args.threads is not None else default_threads()


# -- commands -----------------------------------------------------------------


def cmd_generate(args, argv):
    try:
        spec = SynthSpec(
            num_prototypes=args.prototypes, samples_per_prototype=args.per_group,
            ambient_dim=args.ambient, sample_dim=args.dim, noise_level=args.noise, seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    ds = synth_generate(spec)
    save_dataset(args.out, ds)
    write_manifest(f"{args.out}.manifest.json", argv, {"synth": spec}, args.seed, [args.out])
    print(f"wrote {len(ds)} samples ({spec.ambient_dim}x{spec.sample_dim}) to {args.out}")


def cmd_ingest(args, argv):
    if args.group < 1:
        raise UsageError("--group must be positive")
    if args.source == "mnist":
        X, y = load_idx_images(args.images, args.labels)
        keep = parse_int_list(args.classes) if args.classes else None
        inputs = {"images": args.images, "labels": args.labels}
    else:
        X, y = load_matrix_dataset(args.input)
        keep = parse_int_list(args.classes) if args.classes else None
        inputs = {"in": args.input}
    if X.shape[0] == 0:
        raise SubclustError("input holds no vectors")
    ds = group_into_subspaces(X, y, args.group, keep, seed=args.seed, name=Path(args.out).stem)
    if len(ds) == 0:
        raise SubclustError("no subspace samples produced")
    save_dataset(args.out, ds)
    config = {"source": args.source, **inputs, "classes": keep, "group": args.group}
    write_manifest(f"{args.out}.manifest.json", argv, config, args.seed, [args.out])
    classes, counts = np.unique(ds.class_labels, return_counts=True)
    for c, k in zip(classes, counts):
        log.info("class %d: %d samples", c, k)
    print(f"wrote {len(ds)} samples ({ds.ambient_dim}x{args.group}) to {args.out}")


def _lbg_config(args, **over):
    try:
        return LbgConfig(
            num_centers=over.get("num_centers", getattr(args, "centers", 1)),
            prototype_dim=args.proto_dim,
            prototype_method=over.get("method", Method.SVBF),
            max_outer_iters=args.iters,
            distortion_rel_tol=args.tol,
            init_strategy=args.init,
            seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load(path) -> SubspaceDataset:
    ds = load_dataset(path)
    if len(ds) == 0:
        raise SubclustError(f"{path}: dataset is empty")
    return ds


def cmd_cluster(args, argv):
    if args.centers < 1:
        raise UsageError("--centers must be >= 1")
    cfg = _lbg_config(args, num_centers=args.centers, method=args.method)
    ds = _load(args.data)
    model = lbg_cluster(ds, cfg, threads=_threads(args))
    p = args.out_prefix
    labels_path, protos_path, hist_path = f"{p}.labels.csv", f"{p}.prototypes.subds", f"{p}.distortion.csv"
    with open(labels_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["sample_index", "label", "class", "distance"])
        for j, (lab, d) in enumerate(zip(model.labels, model.distances)):
            cls = "" if ds.class_labels is None else int(ds.class_labels[j])
            w.writerow([j, int(lab), cls, repr(float(d))])
    save_dataset(protos_path, SubspaceDataset(model.prototypes, name="prototypes"))
    with open(hist_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iteration", "distortion"])
        for i, d in enumerate(model.distortion_history):
            w.writerow([i, repr(float(d))])
    outputs = [labels_path, protos_path, hist_path]
    write_manifest(f"{p}.manifest.json", argv, {"lbg": cfg, "data": args.data}, args.seed, outputs)
    print(f"final distortion: {model.distortion:.12g}")
    if ds.class_labels is not None:
        print(f"purity: {purity(model.labels, ds.class_labels):.6g}")


def cmd_sweep(args, argv):
    centers = _positive_list(args.centers)
    try:
        methods = [Method(m.strip()) for m in args.methods.split(",")]
    except ValueError:
        raise UsageError(f"unknown method in {args.methods!r}") from None
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    cfg = _lbg_config(args, num_centers=centers[0])
    ds = _load(args.data)
    p = args.out_prefix
    rec_path, med_path = f"{p}.records.csv", f"{p}.medians.csv"
    config = {
        "lbg": cfg, "data": args.data, "methods": methods, "centers": centers, "trials": args.trials,
    }
    try:
        report = sweep(ds, methods, centers, args.trials, cfg, threads=_threads(args))
    except SweepFailed as e:
        rec_path, med_path = rec_path + ".partial", med_path + ".partial"
        e.report.write_csv(rec_path, med_path, timing=args.timing)
        write_manifest(f"{p}.manifest.json", argv, config, args.seed, [rec_path, med_path])
        raise
    report.write_csv(rec_path, med_path, timing=args.timing)
    write_manifest(f"{p}.manifest.json", argv, config, args.seed, [rec_path, med_path])
    for m in report.medians:
        print(f"{m.method:>10s} m={m.num_centers:<3d} median purity {m.median_purity:.4f}"
              f"  median distortion {m.median_distortion:.6g}")


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subclust", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $SUBCLUST_THREADS or logical cores)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic subspace dataset")
    g.add_argument("--prototypes", type=int, default=5)
    g.add_argument("--per-group", type=int, default=10)
    g.add_argument("--ambient", type=int, default=25)
    g.add_argument("--dim", type=int, default=10)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    ing = sub.add_parser("ingest", parents=[common], help="group raw vectors into subspace samples")
    ing.add_argument("source", choices=["mnist", "csv"])
    ing.add_argument("--images")
    ing.add_argument("--labels")
    ing.add_argument("--in", dest="input")
    ing.add_argument("--classes", default=None, help="comma list of classes to keep")
    ing.add_argument("--group", type=int, default=10)
    ing.add_argument("--seed", type=int, default=0)
    ing.add_argument("--out", required=True)
    ing.set_defaults(func=cmd_ingest)

    def lbg_flags(sp):
        sp.add_argument("--data", required=True)
        sp.add_argument("--proto-dim", type=int, default=1)
        sp.add_argument("--iters", type=int, default=7)
        sp.add_argument("--tol", type=float, default=1e-4, help="relative distortion tolerance")
        sp.add_argument("--init", choices=[s.value for s in InitStrategy], default="sample")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out-prefix", required=True)

    c = sub.add_parser("cluster", parents=[common], help="run one LBG clustering")
    lbg_flags(c)
    c.add_argument("--method", choices=[m.value for m in Method], default="svbf")
    c.add_argument("--centers", type=int, required=True)
    c.set_defaults(func=cmd_cluster)

    s = sub.add_parser("sweep", parents=[common], help="multi-trial center-count sweep")
    lbg_flags(s)
    s.add_argument("--methods", default="svbf,flagmean,flagmedian")
    s.add_argument("--centers", required=True, help="e.g. 3,4,5 or 2..15")
    s.add_argument("--trials", type=int, default=5)
    s.add_argument("--timing", action="store_true",
                   help="fill the seconds column (makes the records CSV run-dependent)")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad flags
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr,
    )
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.command == "ingest":
        if args.source == "mnist" and not (args.images and args.labels):
            parser.error("ingest mnist needs --images and --labels")
        if args.source == "csv" and not args.input:
            parser.error("ingest csv needs --in")
    try:
        args.func(args, argv)
    except UsageError as e:
        parser.error(str(e))
    except (SubclustError, SweepFailed, OSError, ValueError, np.linalg.LinAlgError) as e:
        print(f"subclust: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
