"""Score a learned structure.

Classification: retrain a small two-layer GCN on the frozen graph for
each seed and report test accuracy at the best-validation epoch.
Clustering: k-means on the (augmentation-free) encoder representations,
scored by accuracy under optimal cluster-to-class matching, NMI, macro
F1 after matching and adjusted Rand index, averaged over runs.
"""

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_rand_score, f1_score, normalized_mutual_info_score

from . import tensor
from .contrast import gcn_encode, glorot
from .errors import ConfigurationError, ContractError, DegenerateInputError
from .training import adam_step


def classification_accuracy(pred, truth, mask):
    """Fraction of correct predictions over the masked indices.

    mask may be a boolean vector or an index array.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ContractError(f"length mismatch: {pred.shape} vs {truth.shape}")
    idx = np.asarray(mask)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    if idx.size == 0:
        raise ContractError("empty evaluation mask")
    return float(np.mean(pred[idx] == truth[idx]))


def _normalized_with_loops(S):
    s_hat = S + np.eye(S.shape[0])
    # degrees are >= 1 for nonnegative S; the clamp only guards graphs
    # with strongly negative rows (possible on the elu path)
    deg = np.maximum(s_hat.sum(axis=1), 1e-10)
    inv = 1.0 / np.sqrt(deg)
    return s_hat * (inv[:, None] * inv[None, :])


def _fit_gcn(P, X, y, splits, seed, hidden=32, epochs=1000, lr=0.01,
             weight_decay=5e-4, drop=0.5):
    """Train one classifier on the fixed normalized graph P.

    Returns the test accuracy recorded at the epoch with the best
    validation accuracy. P @ X is hoisted out of the loop: the graph is
    constant here, so the first layer only re-multiplies by its weights.
    """
    rng = np.random.default_rng(seed)
    n, d = X.shape
    classes = int(y.max()) + 1
    px = tensor.constant(P @ X)
    p_node = tensor.constant(P)
    w1 = tensor.parameter(glorot(rng, d, hidden))
    b1 = tensor.parameter(np.zeros((1, hidden)))
    w2 = tensor.parameter(glorot(rng, hidden, classes))
    b2 = tensor.parameter(np.zeros((1, classes)))
    params = [w1, b1, w2, b2]
    moments = []
    best_val = -1.0
    best_test = 0.0
    for epoch in range(1, epochs + 1):
        h = tensor.relu(tensor.add_rowvec(tensor.matmul(px, w1), b1))
        h = tensor.dropout(h, drop, rng)
        logits = tensor.add_rowvec(
            tensor.matmul(p_node, tensor.matmul(h, w2)), b2
        )
        loss = tensor.cross_entropy_masked(logits, y, splits["train"])
        tensor.backward(loss, params)
        grads = [p.grad + weight_decay * p.value for p in params]
        adam_step(params, grads, moments, lr, epoch)

        # evaluation pass without dropout
        h_ev = tensor.relu(tensor.add_rowvec(tensor.matmul(px, w1), b1))
        logit_ev = tensor.add_rowvec(
            tensor.matmul(p_node, tensor.matmul(h_ev, w2)), b2
        )
        pred = logit_ev.value.argmax(axis=1)
        val_acc = classification_accuracy(pred, y, splits["val"])
        if val_acc > best_val:
            best_val = val_acc
            best_test = classification_accuracy(pred, y, splits["test"])
    return best_test


def eval_classify(S, dataset, seeds=(0, 1, 2, 3, 4)):
    """Mean and std of downstream GCN test accuracy over seeds."""
    for key in ("train", "val", "test"):
        if key not in dataset.splits or dataset.splits[key].size == 0:
            raise ConfigurationError(f"dataset is missing a usable {key!r} split")
    S = tensor.as_matrix(S, "adjacency")
    P = _normalized_with_loops(S)
    per_seed = [
        _fit_gcn(P, dataset.X, dataset.y, dataset.splits, seed)
        for seed in seeds
    ]
    return {
        "seeds": [int(s) for s in seeds],
        "per_seed": per_seed,
        "mean": float(np.mean(per_seed)),
        "std": float(np.std(per_seed)),
    }


def _sq_dists(H, centers, h_sq):
    """Squared euclidean point-to-center distances via the Gram expansion."""
    c_sq = (centers * centers).sum(axis=1)
    d2 = h_sq[:, None] + c_sq[None, :] - 2.0 * (H @ centers.T)
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(H, k, rng, h_sq):
    centers = np.empty((k, H.shape[1]))
    centers[0] = H[rng.integers(H.shape[0])]
    d2 = _sq_dists(H, centers[:1], h_sq)[:, 0]
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = H[rng.integers(H.shape[0])]
            continue
        centers[c] = H[rng.choice(H.shape[0], p=d2 / total)]
        d2 = np.minimum(d2, _sq_dists(H, centers[c : c + 1], h_sq)[:, 0])
    return centers


def kmeans(H, k, rng, max_iter=300, tol=1e-6):
    """Lloyd iterations from a k-means++ start; returns (labels, inertia).

    Stops when the relative inertia improvement drops below tol. Empty
    clusters are reseeded with the point currently farthest from its
    center.
    """
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    h_sq = (H * H).sum(axis=1)
    centers = _kmeans_pp_init(H, k, rng, h_sq)
    prev_inertia = np.inf
    assign = np.zeros(n, dtype=np.int64)
    inertia = 0.0
    for _ in range(max_iter):
        d2 = _sq_dists(H, centers, h_sq)
        assign = d2.argmin(axis=1)
        own = d2[np.arange(n), assign].copy()
        inertia = float(own.sum())
        for c in range(k):
            members = assign == c
            if members.any():
                centers[c] = H[members].mean(axis=0)
            else:
                farthest = int(own.argmax())
                centers[c] = H[farthest]
                assign[farthest] = c
                own[farthest] = -1.0
        if np.isfinite(prev_inertia) and (
            prev_inertia - inertia <= tol * max(prev_inertia, 1e-12)
        ):
            break
        prev_inertia = inertia
    return assign, inertia


def _match_clusters(pred, truth, k):
    """Optimal cluster-to-class assignment on the contingency table."""
    contingency = np.zeros((k, k), dtype=np.int64)
    for c, t in zip(pred, truth):
        contingency[c, t] += 1
    rows, cols = linear_sum_assignment(-contingency)
    mapping = np.empty(k, dtype=np.int64)
    mapping[rows] = cols
    return mapping, contingency


def cluster_metrics(pred, truth):
    """C-ACC, NMI, macro F1 (after matching) and ARI for one clustering."""
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    k = int(max(pred.max(), truth.max())) + 1
    mapping, _ = _match_clusters(pred, truth, k)
    mapped = mapping[pred]
    return {
        "cacc": float(np.mean(mapped == truth)),
        "nmi": float(normalized_mutual_info_score(truth, pred)),
        "f1": float(f1_score(truth, mapped, average="macro", zero_division=0)),
        "ari": float(adjusted_rand_score(truth, pred)),
    }


def eval_cluster(model, S, X, labels, runs=10):
    """Cluster the encoder representations of the clean learned view."""
    S = tensor.as_matrix(S, "adjacency")
    X = tensor.as_matrix(X, "features")
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1
    H = gcn_encode((S, X), model.encoder).value
    if np.unique(H, axis=0).shape[0] < k:
        raise DegenerateInputError(
            f"{k} clusters requested but fewer distinct representations exist"
        )
    scores = []
    for run in range(runs):
        rng = np.random.default_rng(run)
        assign, _ = kmeans(H, k, rng)
        scores.append(cluster_metrics(assign, labels))
    return {key: float(np.mean([s[key] for s in scores])) for key in scores[0]}
