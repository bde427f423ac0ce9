"""Labeled datasets: MNIST IDX loading, synthetic Gaussian blobs, and
client partitioning (IID and label-skewed Non-IID)."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagic, EmptyInput, InvalidParam, IoError, TruncatedFile

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix (n_samples x n_features, float64) with integer labels."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise InvalidParam("features must be a 2-D matrix")
        if features.shape[0] != labels.shape[0]:
            raise InvalidParam(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if self.num_classes < 1:
            raise InvalidParam("num_classes must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise InvalidParam(f"labels must lie in [0, {self.num_classes - 1}]")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx], self.num_classes)


@dataclass(frozen=True, eq=False)
class Partition:
    """K disjoint, nonempty index sets over a parent dataset."""

    assignments: list

    def __post_init__(self):
        seen = set()
        for k, idx in enumerate(self.assignments):
            if len(idx) == 0:
                raise InvalidParam(f"client {k} received no samples")
            s = set(int(i) for i in idx)
            if len(s) != len(idx) or s & seen:
                raise InvalidParam("partition index sets must be disjoint")
            seen |= s

    def __len__(self) -> int:
        return len(self.assignments)

    def sizes(self) -> list[int]:
        return [len(a) for a in self.assignments]

    def shards(self, ds: LabeledDataset) -> list[LabeledDataset]:
        return [ds.subset(a) for a in self.assignments]


# --- IDX ---------------------------------------------------------------------

def _read_bytes(path) -> bytes:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise TruncatedFile(f"{path}: corrupt gzip stream") from exc
    return raw


def _parse_idx(raw: bytes, magic: int, ndim: int, path) -> np.ndarray:
    header_len = 4 * (1 + ndim)
    if len(raw) < header_len:
        raise TruncatedFile(f"{path}: header truncated")
    got_magic, *dims = struct.unpack(">" + "I" * (1 + ndim), raw[:header_len])
    if got_magic != magic:
        raise BadMagic(f"{path}: magic 0x{got_magic:08x}, expected 0x{magic:08x}")
    count = int(np.prod(dims))
    body = raw[header_len:]
    if len(body) < count:
        raise TruncatedFile(f"{path}: expected {count} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8, count=count).reshape(dims)


def read_idx_images(path) -> np.ndarray:
    """uint8 array of shape (n, rows, cols). Plain or gzip-compressed files."""
    return _parse_idx(_read_bytes(path), IDX_IMAGES_MAGIC, 3, path)


def read_idx_labels(path) -> np.ndarray:
    return _parse_idx(_read_bytes(path), IDX_LABELS_MAGIC, 1, path)


def load_mnist(images_path, labels_path, limit: int | None = None) -> LabeledDataset:
    """Load an MNIST split; pixels scaled to [0, 1] and flattened row-major."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise InvalidParam(
            f"{images.shape[0]} images but {labels.shape[0]} labels")
    if limit is not None:
        if limit < 1:
            raise InvalidParam("limit must be positive")
        images, labels = images[:limit], labels[:limit]
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return LabeledDataset(features, labels.astype(np.int64), 10)


# --- synthetic ---------------------------------------------------------------

def synth_blobs(n_per_class: int, num_classes: int, n_features: int,
                spread: float, seed: int) -> LabeledDataset:
    """Isotropic Gaussian clusters, one per class, rescaled into [0, 1].

    Centers are drawn uniformly from the unit cube, points are
    ``center + spread * N(0, I)``, then every feature is min-max scaled over
    the whole sample. Rows are grouped by class (class 0 first).
    """
    if n_per_class < 1 or num_classes < 1 or n_features < 1:
        raise InvalidParam("counts must be positive")
    if not spread > 0:
        raise InvalidParam("spread must be > 0")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, 1.0, size=(num_classes, n_features))
    noise = rng.standard_normal((num_classes, n_per_class, n_features))
    x = (centers[:, None, :] + spread * noise).reshape(-1, n_features)
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    x = (x - lo) / span
    y = np.repeat(np.arange(num_classes), n_per_class)
    return LabeledDataset(x, y, num_classes)


def split_dataset(ds: LabeledDataset, n_test: int, seed: int):
    """Random split into ``(train, test)`` with ``n_test`` test rows."""
    if not 0 < n_test < len(ds):
        raise InvalidParam("n_test must be in (0, n_samples)")
    perm = np.random.default_rng(seed).permutation(len(ds))
    return ds.subset(np.sort(perm[n_test:])), ds.subset(np.sort(perm[:n_test]))


def sample_guiding(source: LabeledDataset, size: int, seed: int):
    """Draw the server's guiding set without replacement.

    Returns ``(guiding, remainder)``; the remainder keeps its original order
    and is what the harness evaluates on, so the two never overlap.
    """
    if not 0 < size < len(source):
        raise InvalidParam("guiding size must be in (0, n_samples)")
    perm = np.random.default_rng(seed).permutation(len(source))
    keep = np.ones(len(source), dtype=bool)
    keep[perm[:size]] = False
    return source.subset(np.sort(perm[:size])), source.subset(np.flatnonzero(keep))


# --- partitioning ------------------------------------------------------------

def partition_iid(ds: LabeledDataset, K: int, seed: int) -> Partition:
    """Random permutation cut into K parts whose sizes differ by at most one."""
    if K < 1 or K > len(ds):
        raise InvalidParam(f"need 1 <= K <= n_samples, got K={K}")
    perm = np.random.default_rng(seed).permutation(len(ds))
    return Partition([np.sort(p) for p in np.array_split(perm, K)])


def client_group(client_id: int, num_groups: int) -> int:
    """Label group of a client under the Non-IID scheme (interleaved: k mod L)."""
    return client_id % num_groups


def partition_noniid(ds: LabeledDataset, K: int, q: float, seed: int) -> Partition:
    """Label-skewed split controlled by ``q``.

    Clients form ``L`` equal groups (client ``k`` belongs to group ``k mod L``).
    A label-``l`` sample goes to group ``l`` with probability ``q`` and to each
    other group with probability ``(1 - q) / (L - 1)``. Each group's samples
    are shuffled and dealt evenly across its clients.
    """
    L = ds.num_classes
    if L < 2:
        raise InvalidParam("Non-IID partition needs at least two classes")
    if K < 1 or K % L:
        raise InvalidParam(f"K={K} must be a positive multiple of L={L}")
    if not 0.0 <= q <= 1.0:
        raise InvalidParam("q must be in [0, 1]")
    if len(ds) == 0:
        raise EmptyInput("empty dataset")
    rng = np.random.default_rng(seed)
    n = len(ds)
    home = rng.random(n) < q
    # uniform over the L-1 foreign groups: shift by 1..L-1
    shift = rng.integers(1, L, size=n)
    groups = np.where(home, ds.labels, (ds.labels + shift) % L)

    per_group = K // L
    assignments = [None] * K
    for g in range(L):
        members = np.flatnonzero(groups == g)
        members = members[rng.permutation(members.size)]
        clients = [k for k in range(K) if client_group(k, L) == g]
        for k, part in zip(clients, np.array_split(members, per_group)):
            assignments[k] = np.sort(part)
    return Partition(assignments)
