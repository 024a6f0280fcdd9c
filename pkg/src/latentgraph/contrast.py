"""Shared two-layer GCN encoder, two-layer MLP projector and the
symmetric normalized temperature-scaled contrastive loss.

The same encoder/projector parameters process both views; gradients
accumulate from the two forward paths on one tape.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import ConfigurationError
from .learners import gnn_propagate


@dataclass
class Encoder:
    """Two graph-convolution layers, relu after the first, linear second."""

    w1: tensor.DiffNode  # d x d1
    w2: tensor.DiffNode  # d1 x d1

    @property
    def params(self):
        return [self.w1, self.w2]


@dataclass
class Projector:
    """Two dense layers, relu after the first, linear second."""

    w1: tensor.DiffNode  # d1 x d2
    w2: tensor.DiffNode  # d2 x d2

    @property
    def params(self):
        return [self.w1, self.w2]


@dataclass
class ContrastiveModel:
    encoder: Encoder
    projector: Projector

    @property
    def params(self):
        return self.encoder.params + self.projector.params


def glorot(rng, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_encoder(d, d1, rng):
    return Encoder(
        w1=tensor.parameter(glorot(rng, d, d1)),
        w2=tensor.parameter(glorot(rng, d1, d1)),
    )


def init_projector(d1, d2, rng):
    return Projector(
        w1=tensor.parameter(glorot(rng, d1, d2)),
        w2=tensor.parameter(glorot(rng, d2, d2)),
    )


def gcn_encode(view, enc):
    """Encode one (adjacency, features) view into representations H.

    The adjacency is re-normalized with self-loops here whatever it is,
    so the raw anchor (including the identity anchor) and the already
    normalized learned graph go through the identical transform.
    """
    adj, feats = view
    h = gnn_propagate(feats, adj, enc.w1, act="relu")
    return gnn_propagate(h, adj, enc.w2, act="identity")


def mlp_project(H, proj):
    """Z = relu(H W1) W2."""
    return tensor.matmul(tensor.relu(tensor.matmul(H, proj.w1)), proj.w2)


def nt_xent(z_l, z_a, t):
    """Symmetric temperature-scaled contrastive loss between two
    projection sets.

    Row i of each side forms a positive pair; all n rows of the other
    side (including i itself) are the candidate set. With M the cosine
    similarity matrix between the two sides, the loss is

        (1/2n) * sum_i [lse(M_i/t) + lse((M^T)_i/t) - 2 M_ii/t]

    which equals the usual negative mean of both directions' log
    softmax scores of the positives.
    """
    if t <= 0:
        raise ConfigurationError(f"temperature must be positive, got {t}")
    if z_l.value.shape != z_a.value.shape:
        raise ConfigurationError(
            f"projection shapes differ: {z_l.value.shape} vs {z_a.value.shape}"
        )
    n = z_l.value.shape[0]
    m = tensor.scale(tensor.cosine_similarity_matrix(z_l, z_a), 1.0 / t)
    pull = tensor.add(
        tensor.sum_all(tensor.logsumexp_rows(m)),
        tensor.sum_all(tensor.logsumexp_rows(tensor.transpose(m))),
    )
    push = tensor.scale(tensor.trace_sum(m), 2.0)
    return tensor.scale(tensor.sub(pull, push), 1.0 / (2.0 * n))
