"""Dataset loading, kNN graph construction, edge perturbation and
adjacency serialization.

A dataset directory holds:

    features.tsv   n rows of d tab-separated reals
    labels.tsv     n integer class ids, one per line
    splits.json    {"train": [...], "val": [...], "test": [...]}
    edges.tsv      optional, one "i<TAB>j<TAB>w" per line, undirected

Everything is plain text so datasets diff cleanly and survive any
toolchain. Learned adjacencies round-trip bitwise through
save_adjacency/load_adjacency.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import ConfigurationError, ContractError, ParseError
from .postprocess import process


@dataclass
class Dataset:
    name: str
    X: np.ndarray
    y: np.ndarray
    splits: dict
    A: np.ndarray | None = None

    @property
    def n_nodes(self):
        return self.X.shape[0]

    @property
    def n_classes(self):
        return int(self.y.max()) + 1


def _read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def _parse_features(path):
    rows = []
    width = None
    for ln, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise ParseError(path, ln, f"expected {width} columns, got {len(parts)}")
        try:
            row = np.array(parts, dtype=np.float64)
        except ValueError:
            raise ParseError(path, ln, "non-numeric feature value") from None
        if not np.isfinite(row).all():
            raise ParseError(path, ln, "non-finite feature value")
        rows.append(row)
    if not rows:
        raise ParseError(path, 1, "no feature rows")
    return np.vstack(rows)


def _parse_labels(path, n):
    labels = []
    for ln, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            labels.append(int(line.strip()))
        except ValueError:
            raise ParseError(path, ln, "label is not an integer") from None
    if len(labels) != n:
        raise ParseError(path, len(labels) + 1, f"expected {n} labels, got {len(labels)}")
    y = np.array(labels, dtype=np.int64)
    if (y < 0).any():
        raise ParseError(path, int(np.argmax(y < 0)) + 1, "negative class id")
    return y


def _parse_splits(path, n):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(path, e.lineno, f"invalid JSON: {e.msg}") from None
    splits = {}
    for key in ("train", "val", "test"):
        if key not in raw:
            raise ParseError(path, 1, f"missing split {key!r}")
        idx = np.array(raw[key], dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ParseError(path, 1, f"split {key!r} has out-of-range indices")
        splits[key] = idx
    lumped = np.concatenate([splits[k] for k in ("train", "val", "test")])
    if np.unique(lumped).size != lumped.size:
        raise ParseError(path, 1, "splits are not pairwise disjoint")
    return splits


def _parse_edges(path, n):
    W = np.zeros((n, n))
    for ln, line in enumerate(_read_lines(path), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(path, ln, f"expected 3 columns, got {len(parts)}")
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(path, ln, "malformed edge triplet") from None
        if not 0 <= i < n or not 0 <= j < n:
            raise ParseError(path, ln, f"edge endpoint out of range [0, {n})")
        if not math.isfinite(w):
            raise ParseError(path, ln, "non-finite edge weight")
        # duplicates accumulate, then the two directions are merged by max
        W[i, j] += w
    return np.maximum(W, W.T)


def load_dataset(directory):
    """Load a dataset directory into a :class:`Dataset`."""
    directory = os.fspath(directory)
    name = os.path.basename(os.path.normpath(directory))
    feat_path = os.path.join(directory, "features.tsv")
    if not os.path.exists(feat_path):
        raise ParseError(feat_path, 1, "features.tsv not found")
    X = _parse_features(feat_path)
    n = X.shape[0]
    y = _parse_labels(os.path.join(directory, "labels.tsv"), n)
    splits = _parse_splits(os.path.join(directory, "splits.json"), n)
    edge_path = os.path.join(directory, "edges.tsv")
    A = _parse_edges(edge_path, n) if os.path.exists(edge_path) else None
    if A is not None and (A < 0).any():
        raise ParseError(edge_path, 1, "negative edge weights after merging")
    return Dataset(name=name, X=X, y=y, splits=splits, A=A)


def build_knn_graph(X, k):
    """Cosine kNN graph, post-processed like a metric-learner sketch.

    Runs the exact relu-path pipeline (top-k per row with low-index tie
    break, relu, symmetrize, degree normalize) so the result is directly
    comparable with, and usable as initialization for, learned graphs.
    """
    X = tensor.as_matrix(X, "features")
    n = X.shape[0]
    if not 1 <= k < n:
        raise ConfigurationError(f"k must satisfy 1 <= k < {n}, got {k}")
    sims = tensor.cosine_similarity_matrix(tensor.constant(X))
    return process(sims, k, "mlp").value


def _upper_pairs(A, present):
    iu, ju = np.triu_indices(A.shape[0], k=1)
    nz = A[iu, ju] != 0
    keep = nz if present else ~nz
    return iu[keep], ju[keep]


def perturb_edges(A, rate, mode, rng):
    """Delete or add floor(rate * m) undirected non-self edges uniformly.

    m is the number of existing undirected edges. Added edges get weight 1.
    """
    A = tensor.as_matrix(A, "adjacency")
    if not np.array_equal(A, A.T):
        raise ContractError("perturb_edges requires a symmetric adjacency")
    if not 0.0 <= rate <= 1.0:
        raise ContractError(f"perturbation rate must be in [0, 1], got {rate}")
    if mode not in ("delete", "add"):
        raise ConfigurationError(f"unknown perturbation mode {mode!r}")
    out = A.copy()
    ei, ej = _upper_pairs(A, present=True)
    m = ei.size
    count = int(math.floor(rate * m))
    if count == 0:
        return out
    if mode == "delete":
        chosen = rng.choice(m, size=count, replace=False)
        out[ei[chosen], ej[chosen]] = 0.0
        out[ej[chosen], ei[chosen]] = 0.0
    else:
        ai, aj = _upper_pairs(A, present=False)
        if count > ai.size:
            raise ContractError(
                f"cannot add {count} edges, only {ai.size} absent pairs left"
            )
        chosen = rng.choice(ai.size, size=count, replace=False)
        out[ai[chosen], aj[chosen]] = 1.0
        out[aj[chosen], ai[chosen]] = 1.0
    return out


def save_adjacency(S, path):
    """Write a symmetric adjacency as upper-triangle triplets.

    Format: a `# n=<N>` header, then one `i<TAB>j<TAB>w` line per nonzero
    with i <= j (the diagonal is stored so round-trips are exact) and 17
    significant digits, enough to reproduce every float64 bit for bit.
    """
    S = tensor.as_matrix(S, "adjacency")
    if not np.array_equal(S, S.T):
        raise ContractError("save_adjacency requires a symmetric matrix")
    n = S.shape[0]
    iu, ju = np.triu_indices(n, k=0)
    vals = S[iu, ju]
    nz = vals != 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={n}\n")
        for i, j, w in zip(iu[nz], ju[nz], vals[nz]):
            fh.write(f"{i}\t{j}\t{w:.17g}\n")


def load_adjacency(path):
    """Inverse of save_adjacency."""
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("# n="):
        raise ParseError(path, 1, "missing '# n=<N>' header")
    try:
        n = int(lines[0][4:])
    except ValueError:
        raise ParseError(path, 1, "malformed header") from None
    if n < 0:
        raise ParseError(path, 1, "negative matrix size")
    S = np.zeros((n, n))
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(path, ln, f"expected 3 columns, got {len(parts)}")
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(path, ln, "malformed triplet") from None
        if not 0 <= i < n or not 0 <= j < n:
            raise ParseError(path, ln, f"index out of range [0, {n})")
        S[i, j] = w
        S[j, i] = w
    return S
