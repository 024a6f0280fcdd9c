"""Parameterized producers of the raw adjacency sketch.

Four flavors:

  fgp        one free parameter per adjacency entry, sketch = elu(omega)
  attentive  per-dimension feature reweighting, sketch = cosine of embeddings
  mlp        dense layers on features, sketch = cosine of embeddings
  gnn        graph-convolution layers over a given graph (refinement only)

All embedding stacks use relu between layers and a linear last layer, and
are initialized so the first forward pass reproduces a kNN-style graph:
the fgp parameters hold the elu-preimage of the kNN graph weights, the
attentive weights start at one and the mlp/gnn weights at identity.
"""

import numpy as np

from . import tensor
from .data import build_knn_graph
from .errors import ConfigurationError


class FgpLearner:
    """Full graph parameterization: an n x n free matrix."""

    kind = "fgp"

    def __init__(self, omega):
        if not isinstance(omega, tensor.DiffNode):
            omega = tensor.parameter(tensor.as_matrix(omega, "omega"))
        if omega.value.shape[0] != omega.value.shape[1]:
            raise ConfigurationError(
                f"omega must be square, got {omega.value.shape}"
            )
        self.omega = omega

    @property
    def params(self):
        return [self.omega]

    def forward(self, X=None, A=None):
        return tensor.elu(self.omega)


class _EmbeddingLearner:
    """Shared plumbing for learners that embed features then take cosine."""

    def __init__(self, layer_weights):
        self.layer_weights = [
            w if isinstance(w, tensor.DiffNode) else tensor.parameter(w)
            for w in layer_weights
        ]

    @property
    def params(self):
        return list(self.layer_weights)

    def embed(self, X, A=None):
        h = X if isinstance(X, tensor.DiffNode) else tensor.constant(X)
        last = len(self.layer_weights) - 1
        for i, w in enumerate(self.layer_weights):
            h = self._layer(h, w, A)
            if i < last:
                h = tensor.relu(h)
        return h

    def forward(self, X, A=None):
        return tensor.cosine_similarity_matrix(self.embed(X, A))


class AttentiveLearner(_EmbeddingLearner):
    """Each layer rescales feature dimensions with a learned 1 x d vector."""

    kind = "attentive"

    def _layer(self, h, w, A):
        return tensor.scale_cols(h, w)


class MlpLearner(_EmbeddingLearner):
    """Each layer is a dense d x d transform."""

    kind = "mlp"

    def _layer(self, h, w, A):
        return tensor.matmul(h, w)


class GnnLearner(_EmbeddingLearner):
    """Graph-convolution layers over a fixed base adjacency.

    Only meaningful when an input graph exists, i.e. refinement mode. The
    graph may be supplied at construction or per forward call.
    """

    kind = "gnn"

    def __init__(self, layer_weights, base_adjacency=None):
        super().__init__(layer_weights)
        self.base_adjacency = (
            None if base_adjacency is None else _check_base(base_adjacency)
        )

    def _layer(self, h, w, A):
        base = self.base_adjacency if A is None else A
        if base is None:
            raise ConfigurationError("gnn learner requires an input adjacency")
        return gnn_propagate(h, base, w)


def _check_base(A):
    A = tensor.as_matrix(A, "base_adjacency")
    if not np.array_equal(A, A.T) or (A < 0).any():
        raise ConfigurationError(
            "gnn learner needs a symmetric nonnegative base adjacency"
        )
    return A


def gnn_propagate(e_prev, A, omega, act="identity"):
    """One graph-convolution layer: act(D^{-1/2} (A+I) D^{-1/2} E W).

    Self-loops guarantee positive degrees, so the normalization is always
    well defined.
    """
    a_node = A if isinstance(A, tensor.DiffNode) else tensor.constant(A)
    e_prev = e_prev if isinstance(e_prev, tensor.DiffNode) else tensor.constant(e_prev)
    p = tensor.sym_normalize(tensor.add_eye(a_node))
    # P (E W) rather than (P E) W: same product, but backward through P
    # then costs n^2 * cols(W) instead of n^2 * cols(E)
    out = tensor.matmul(p, tensor.matmul(e_prev, omega))
    return tensor.activation(out, act)


def fgp_forward(learner):
    return learner.forward()


def metric_forward(learner, X, A=None):
    """Embed features and take pairwise cosine similarities."""
    return learner.forward(X, A)


def init_learner(kind, X, A=None, k=None, layers=2):
    """Build a learner with the kNN-equivalent initialization.

    fgp parameters start at the elu-preimage of the processed kNN graph
    of X (preimage of 0 is 0), so the first forward pass reproduces that
    graph exactly. The metric learners start at weights that make their
    embedding the (relu-stable) identity.
    """
    X = tensor.as_matrix(X, "features")
    n, d = X.shape
    if k is None or k < 1:
        raise ConfigurationError(f"k must be a positive count, got {k}")
    if k >= n:
        raise ConfigurationError(f"k must be smaller than n={n}, got {k}")
    if kind == "fgp":
        w = build_knn_graph(X, k)
        omega = np.where(w >= 0.0, w, np.log1p(w))
        return FgpLearner(omega)
    if kind == "attentive":
        return AttentiveLearner([np.ones((1, d)) for _ in range(layers)])
    if kind == "mlp":
        return MlpLearner([np.eye(d) for _ in range(layers)])
    if kind == "gnn":
        if A is None:
            raise ConfigurationError("gnn learner requires the input adjacency")
        return GnnLearner([np.eye(d) for _ in range(layers)], A)
    raise ConfigurationError(f"unknown learner kind {kind!r}")
