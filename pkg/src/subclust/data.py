"""Subspace datasets: synthetic generator, MNIST IDX ingestion, CSV matrices, SUBDS1 files."""

from __future__ import annotations

import csv
import gzip
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import (
    AmbientMismatch,
    BadMagic,
    ClassTooSmall,
    CountMismatch,
    InconsistentWidth,
    LengthMismatch,
    ParseError,
    RankDeficient,
    TruncatedFile,
)
from .linalg import Subspace, orthonormalize

log = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
SUBDS_MAGIC = b"SUBDS1"


@dataclass
class SubspaceDataset:
    samples: List[Subspace]
    class_labels: Optional[np.ndarray] = None
    name: str = ""
    _stack: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.samples = list(self.samples)
        if self.samples:
            n = self.samples[0].ambient_dim
            for s in self.samples:
                if s.ambient_dim != n:
                    raise AmbientMismatch(f"samples disagree on ambient dim: {n} vs {s.ambient_dim}")
        if self.class_labels is not None:
            self.class_labels = np.asarray(self.class_labels, dtype=np.int64)
            if self.class_labels.shape != (len(self.samples),):
                raise LengthMismatch(
                    f"{len(self.class_labels)} class labels for {len(self.samples)} samples"
                )

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    @property
    def ambient_dim(self) -> int:
        return self.samples[0].ambient_dim if self.samples else 0

    @property
    def uniform_dim(self) -> Optional[int]:
        dims = {s.subspace_dim for s in self.samples}
        return dims.pop() if len(dims) == 1 else None

    def stack(self) -> Optional[np.ndarray]:
        """(N, n, l) array of bases, or None when sample dimensions differ."""
        if self._stack is None and self.samples and self.uniform_dim is not None:
            self._stack = np.stack([s.basis for s in self.samples])
        return self._stack

    def chunks(self, size: int) -> list:
        """Consecutive blocks of at most ``size`` samples, each a list of (c, n, l) arrays."""
        st = self.stack()
        out = []
        for a in range(0, len(self), size):
            if st is not None:
                out.append([st[a : a + size]])
            else:
                out.append([s.basis[None] for s in self.samples[a : a + size]])
        return out

    def subset(self, idx) -> "SubspaceDataset":
        idx = np.asarray(idx, dtype=np.int64)
        labels = None if self.class_labels is None else self.class_labels[idx]
        return SubspaceDataset([self.samples[i] for i in idx], labels, self.name)


# -- synthetic data ---------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    num_prototypes: int = 5
    samples_per_prototype: int = 10
    ambient_dim: int = 25
    sample_dim: int = 10
    noise_level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_prototypes < 1 or self.samples_per_prototype < 1:
            raise ValueError("prototype and per-group counts must be positive")
        if self.sample_dim < 1:
            raise ValueError("sample dim must be positive")
        if self.sample_dim >= self.ambient_dim:
            raise ValueError("sample dim must be < ambient")
        if self.noise_level < 0:
            raise ValueError("noise level must be >= 0")


def _draw_lines(rng, spec):
    lines = rng.standard_normal((spec.ambient_dim, spec.num_prototypes))
    return lines / np.linalg.norm(lines, axis=0)


def synth_generator_lines(spec: SynthSpec) -> np.ndarray:
    """The (n, num_prototypes) unit generator directions behind synth_generate(spec)."""
    return _draw_lines(np.random.default_rng(spec.seed), spec)


def synth_generate(spec: SynthSpec, max_retries: int = 5) -> SubspaceDataset:
    """Samples clustered around random lines; each sample contains a noisy copy of its line."""
    rng = np.random.default_rng(spec.seed)
    n, l = spec.ambient_dim, spec.sample_dim
    lines = _draw_lines(rng, spec)
    samples, labels = [], []
    for g in range(spec.num_prototypes):
        for _ in range(spec.samples_per_prototype):
            for attempt in range(max_retries + 1):
                # unit expected norm, so the perturbation has magnitude ~noise_level
                noise = rng.standard_normal(n) / np.sqrt(n)
                u = lines[:, g] + spec.noise_level * noise
                G = rng.standard_normal((n, l - 1))
                try:
                    u = u / np.linalg.norm(u)
                    samples.append(orthonormalize(np.column_stack([u, G])))
                    break
                except RankDeficient:
                    if attempt == max_retries:
                        raise
            labels.append(g)
    return SubspaceDataset(samples, np.array(labels), name=f"synth-{spec.seed}")


# -- IDX (MNIST) --------------------------------------------------------------


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx(path, magic, ndim):
    with _open(path) as f:
        raw = f.read()
    if len(raw) < 4:
        raise TruncatedFile(f"{path}: missing header")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise BadMagic(f"{path}: magic 0x{got:08x}, expected 0x{magic:08x}")
    hdr = 4 + 4 * ndim
    if len(raw) < hdr:
        raise TruncatedFile(f"{path}: header truncated")
    dims = struct.unpack(">" + "I" * ndim, raw[4:hdr])
    size = int(np.prod(dims))
    if len(raw) - hdr < size:
        raise TruncatedFile(f"{path}: expected {size} data bytes, found {len(raw) - hdr}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=hdr).reshape(dims)


def load_idx_images(images_path, labels_path):
    """MNIST IDX pair -> (N x rows*cols matrix scaled to [0, 1], labels)."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return X, labels.astype(np.int64)


def write_idx_images(path, images: np.ndarray):
    images = np.asarray(images, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape))
        f.write(images.tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


# -- grouping ---------------------------------------------------------------


def group_into_subspaces(
    vectors, classes, group_size: int, keep_classes: Optional[Sequence[int]] = None, seed: int = 0,
    name: str = "",
) -> SubspaceDataset:
    """Shuffle each kept class and orthonormalize consecutive groups of vectors.

    Remainders smaller than ``group_size`` are dropped, as are groups that turn
    out rank deficient (logged).
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    classes = np.asarray(classes, dtype=np.int64)
    if len(vectors) != len(classes):
        raise LengthMismatch(f"{len(vectors)} vectors but {len(classes)} classes")
    if group_size < 1:
        raise ValueError("group size must be positive")
    n = vectors.shape[1] if vectors.ndim == 2 else 0
    if group_size > n:
        raise ValueError(f"group size {group_size} exceeds vector length {n}")
    if keep_classes is None:
        keep_classes = np.unique(classes)
    keep = sorted({int(c) for c in keep_classes})
    rng = np.random.default_rng(seed)
    samples, labels = [], []
    for c in keep:
        idx = np.flatnonzero(classes == c)
        if idx.size < group_size:
            raise ClassTooSmall(f"class {c} has {idx.size} vectors, need {group_size}")
        idx = idx[rng.permutation(idx.size)]
        ngroups = idx.size // group_size
        dropped = 0
        for g in range(ngroups):
            block = vectors[idx[g * group_size : (g + 1) * group_size]].T
            try:
                samples.append(orthonormalize(block))
                labels.append(c)
            except RankDeficient as e:
                dropped += 1
                log.warning("class %d group %d dropped: rank %d < %d", c, g, e.effective_rank, group_size)
        log.info(
            "class %d: %d vectors -> %d samples (%d remainder vectors, %d rank-deficient groups)",
            c, idx.size, ngroups - dropped, idx.size - ngroups * group_size, dropped,
        )
    return SubspaceDataset(samples, np.array(labels, dtype=np.int64), name=name)


# -- CSV matrices -----------------------------------------------------------


def load_matrix_dataset(path):
    """CSV with header ``class,f0,...,f{n-1}`` -> (N x n matrix, classes)."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "missing header") from None
        if not header or header[0].strip() != "class":
            raise ParseError(1, "header must start with 'class'")
        width = len(header) - 1
        rows, classes = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) - 1 != width:
                raise InconsistentWidth(lineno, width, len(row) - 1)
            try:
                c = int(row[0])
                vals = [float(v) for v in row[1:]]
            except ValueError as e:
                raise ParseError(lineno, str(e)) from None
            if c < 0:
                raise ParseError(lineno, "class must be non-negative")
            classes.append(c)
            rows.append(vals)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    return X, np.array(classes, dtype=np.int64)


# -- SUBDS1 container -------------------------------------------------------
# little-endian: magic, u64 n, u64 count, then per sample
# u64 l, u8 has_class, [i64 class], n*l float64 column-major


def save_dataset(path, ds: SubspaceDataset):
    with open(path, "wb") as f:
        f.write(SUBDS_MAGIC)
        f.write(struct.pack("<QQ", ds.ambient_dim, len(ds)))
        for j, s in enumerate(ds.samples):
            f.write(struct.pack("<Q", s.subspace_dim))
            if ds.class_labels is None:
                f.write(struct.pack("<B", 0))
            else:
                f.write(struct.pack("<Bq", 1, int(ds.class_labels[j])))
            f.write(np.asfortranarray(s.basis, dtype="<f8").tobytes(order="F"))


def load_dataset(path, name: Optional[str] = None) -> SubspaceDataset:
    raw = Path(path).read_bytes()
    if raw[:6] != SUBDS_MAGIC:
        raise BadMagic(f"{path}: not a SUBDS1 file")
    pos = 6

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(raw):
            raise TruncatedFile(f"{path}: unexpected end of file")
        out = struct.unpack_from(fmt, raw, pos)
        pos += size
        return out

    n, count = take("<QQ")
    samples, labels = [], []
    for _ in range(count):
        (l,) = take("<Q")
        (has,) = take("<B")
        labels.append(take("<q")[0] if has else None)
        nbytes = 8 * n * l
        if pos + nbytes > len(raw):
            raise TruncatedFile(f"{path}: unexpected end of file")
        B = np.frombuffer(raw, dtype="<f8", count=n * l, offset=pos).reshape((n, l), order="F")
        pos += nbytes
        samples.append(Subspace(B))
    cl = None
    if labels and all(c is not None for c in labels):
        cl = np.array(labels, dtype=np.int64)
    return SubspaceDataset(samples, cl, name=name if name is not None else Path(path).stem)
