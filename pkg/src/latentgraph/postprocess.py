"""Turn a raw adjacency sketch into a sparse, nonnegative, symmetric,
degree-normalized graph.

Pipeline order is sparsify -> activate -> symmetrize -> normalize. The
full-parameterization ("fgp") learner skips sparsification and activates
with elu; the similarity-based learners activate with relu, which also
guarantees nonnegativity downstream.
"""

import numpy as np

from . import tensor
from .errors import ConfigurationError

LEARNER_KINDS = ("fgp", "attentive", "mlp", "gnn")


def _check_kind(kind):
    if kind not in LEARNER_KINDS:
        raise ConfigurationError(
            f"unknown learner kind {kind!r}, expected one of {LEARNER_KINDS}"
        )


def topk_mask(values, k):
    """Binary mask keeping the k largest entries of each row.

    Ties are broken toward the lower column index (stable sort on the
    negated values). The diagonal gets no special treatment.
    """
    values = np.asarray(values, dtype=np.float64)
    n_cols = values.shape[1]
    if not 1 <= k < n_cols:
        raise ConfigurationError(
            f"k must satisfy 1 <= k < {n_cols}, got {k}"
        )
    order = np.argsort(-values, axis=1, kind="stable")
    mask = np.zeros_like(values)
    rows = np.repeat(np.arange(values.shape[0]), k)
    mask[rows, order[:, :k].ravel()] = 1.0
    return mask


def topk_sparsify(sketch, k):
    """Zero everything but each row's k largest entries.

    The mask is a hard constant in the forward pass, so gradients flow
    only through the kept entries.
    """
    mask = topk_mask(sketch.value, k)
    return tensor.hadamard(sketch, tensor.constant(mask))


def activate_symmetrize(sketch, learner_kind):
    """(act(S) + act(S)^T) / 2 with relu for metric learners, elu for fgp."""
    _check_kind(learner_kind)
    act = "elu" if learner_kind == "fgp" else "relu"
    return tensor.symmetrize(tensor.activation(sketch, act))


def normalize_sym(sketch):
    """Symmetric degree normalization; see tensor.sym_normalize."""
    return tensor.sym_normalize(sketch)


def process(sketch, k, learner_kind):
    """Full post-processing pipeline producing the usable adjacency."""
    _check_kind(learner_kind)
    if learner_kind != "fgp":
        sketch = topk_sparsify(sketch, k)
    return normalize_sym(activate_symmetrize(sketch, learner_kind))
