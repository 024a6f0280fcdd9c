"""View corruption: random feature masking and edge dropping.

Both corruptions are drawn once per view from a shared PRNG and applied
as constant binary masks, so the trainer can replay a draw inside the
differentiable pipeline without consuming extra randomness. The drawing
order is fixed (learner view first, edges before features) to keep runs
reproducible.

Probabilities are DROP probabilities: a mask entry is 0 with probability
p and 1 otherwise.
"""

from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import ContractError


@dataclass
class MaskDraw:
    """One view's corruption: a d feature mask, an n x n edge mask and the
    PRNG state snapshot taken just before drawing."""

    feature_mask: np.ndarray
    edge_mask: np.ndarray
    seed_state: dict


def _check_prob(p, name):
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"{name} must be in [0, 1], got {p}")


def draw_feature_mask(d, p_x, rng):
    """Binary vector of length d; each entry drops (0) with probability p_x."""
    _check_prob(p_x, "feature mask probability")
    return (rng.random(d) >= p_x).astype(np.float64)


def draw_edge_mask(n, p_a, rng):
    """Symmetric binary n x n mask over unordered pairs; diagonal stays 1.

    Each pair (i, j), i < j, drops with probability p_a and the decision
    is mirrored to (j, i).
    """
    _check_prob(p_a, "edge drop probability")
    mask = np.ones((n, n))
    iu, ju = np.triu_indices(n, k=1)
    keep = (rng.random(iu.size) >= p_a).astype(np.float64)
    mask[iu, ju] = keep
    mask[ju, iu] = keep
    return mask


def draw_masks(n, d, p_edge, p_feat, rng):
    """Draw one view's corruption masks (edges first, then features)."""
    state = rng.bit_generator.state
    edge = draw_edge_mask(n, p_edge, rng)
    feat = draw_feature_mask(d, p_feat, rng)
    return MaskDraw(feature_mask=feat, edge_mask=edge, seed_state=state)


def feature_mask(X, p_x, rng):
    """Zero a random subset of feature columns, the same columns for
    every node."""
    X = tensor.as_matrix(X, "features")
    return X * draw_feature_mask(X.shape[1], p_x, rng)[None, :]


def edge_drop(A, p_a, rng):
    """Zero a random subset of undirected edges; self-loops survive."""
    A = tensor.as_matrix(A, "adjacency")
    if not np.array_equal(A, A.T):
        raise ContractError("edge_drop requires a symmetric adjacency")
    return A * draw_edge_mask(A.shape[0], p_a, rng)


def apply_masks(adj, X, draw):
    """Apply a recorded draw to an (adjacency, features) pair.

    The adjacency may be a DiffNode (the learned graph, gradients flow
    through the kept entries) or a plain matrix (the anchor).
    """
    masked_x = tensor.constant(
        tensor.as_matrix(X, "features") * draw.feature_mask[None, :]
    )
    if isinstance(adj, tensor.DiffNode):
        masked_a = tensor.hadamard(adj, tensor.constant(draw.edge_mask))
    else:
        masked_a = tensor.constant(adj * draw.edge_mask)
    return masked_a, masked_x


def augment_views(S, A_a, X, cfg, rng):
    """Produce the corrupted (learner, anchor) view pair.

    cfg needs attributes p_a, p_x_learner, p_x_anchor. Both views share
    the edge-drop probability but draw independent masks; the feature
    masks use per-view probabilities.
    """
    S = tensor.as_matrix(S, "learned adjacency")
    A_a = tensor.as_matrix(A_a, "anchor adjacency")
    X = tensor.as_matrix(X, "features")
    for name, mat in (("learned adjacency", S), ("anchor adjacency", A_a)):
        if not np.array_equal(mat, mat.T):
            raise ContractError(f"{name} must be symmetric")
    n, d = X.shape
    draw_l = draw_masks(n, d, cfg.p_a, cfg.p_x_learner, rng)
    draw_a = draw_masks(n, d, cfg.p_a, cfg.p_x_anchor, rng)
    view_l = (S * draw_l.edge_mask, X * draw_l.feature_mask[None, :])
    view_a = (A_a * draw_a.edge_mask, X * draw_a.feature_mask[None, :])
    return view_l, view_a
