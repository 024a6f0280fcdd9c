import json
import os

import numpy as np
import pytest

from latentgraph.data import Dataset


def make_blobs_dataset(n_per_class=20, d=8, classes=2, seed=1, with_graph=False):
    """Well-separated nonnegative gaussian blobs with a tiny labeled split."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    for c in range(classes):
        center = np.zeros(d)
        center[c % d] = 6.0
        X.append(np.abs(rng.normal(0, 1, (n_per_class, d))) + center)
        y.extend([c] * n_per_class)
    X = np.vstack(X)
    y = np.array(y, dtype=np.int64)
    perm = rng.permutation(y.size)
    X, y = X[perm], y[perm]
    n = y.size
    n_train = max(2 * classes, n // 10)
    splits = {
        "train": np.arange(0, n_train),
        "val": np.arange(n_train, 2 * n_train),
        "test": np.arange(2 * n_train, n),
    }
    A = None
    if with_graph:
        same = (y[:, None] == y[None, :]).astype(np.float64)
        noise = rng.random((n, n)) < 0.05
        A = np.where(same, (rng.random((n, n)) < 0.3).astype(float), noise.astype(float))
        A = np.maximum(A, A.T)
        np.fill_diagonal(A, 0.0)
    return Dataset(name="blobs", X=X, y=y, splits=splits, A=A)


def write_dataset_dir(path, dataset):
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "features.tsv"), "w") as fh:
        for row in dataset.X:
            fh.write("\t".join(f"{v:.17g}" for v in row) + "\n")
    with open(os.path.join(path, "labels.tsv"), "w") as fh:
        fh.write("\n".join(str(int(v)) for v in dataset.y) + "\n")
    with open(os.path.join(path, "splits.json"), "w") as fh:
        json.dump({k: v.tolist() for k, v in dataset.splits.items()}, fh)
    if dataset.A is not None:
        with open(os.path.join(path, "edges.tsv"), "w") as fh:
            n = dataset.A.shape[0]
            for i in range(n):
                for j in range(i + 1, n):
                    if dataset.A[i, j] != 0:
                        fh.write(f"{i}\t{j}\t{dataset.A[i, j]:.17g}\n")
    return path


@pytest.fixture
def blobs():
    return make_blobs_dataset()


@pytest.fixture
def blobs_with_graph():
    return make_blobs_dataset(with_graph=True)


@pytest.fixture
def blobs_dir(tmp_path, blobs):
    return write_dataset_dir(str(tmp_path / "blobs"), blobs)


@pytest.fixture
def blobs_graph_dir(tmp_path, blobs_with_graph):
    return write_dataset_dir(str(tmp_path / "blobsg"), blobs_with_graph)
