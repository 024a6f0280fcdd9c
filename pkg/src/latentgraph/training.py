"""Training loop: alternate contrastive updates of the graph learner and
encoder with a slow-moving bootstrap of the anchor graph.

Per iteration: sketch the adjacency, post-process it, corrupt the learner
view (S, X) and anchor view (A_a, X), encode both with the shared GCN,
project, take the symmetric contrastive loss, backprop and step Adam.
Every c iterations the anchor absorbs a (1 - tau) fraction of the current
learned graph. The anchor itself is never differentiated.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import tensor
from .augment import apply_masks, draw_masks
from .contrast import (
    ContrastiveModel,
    gcn_encode,
    init_encoder,
    init_projector,
    mlp_project,
    nt_xent,
)
from .errors import ConfigurationError, ContractError, TrainingDiverged
from .learners import init_learner
from .postprocess import LEARNER_KINDS, process

log = logging.getLogger("latentgraph")

TASKS = ("inference", "refinement")


@dataclass
class TrainConfig:
    task: str
    learner_kind: str = "fgp"
    k: int = 30
    tau: float = 0.9999
    c: int = 1
    p_x_learner: float = 0.2
    p_x_anchor: float = 0.6
    p_a: float = 0.25
    temperature: float = 0.2
    epochs: int = 500
    lr: float = 0.01
    d1: int = 512
    d2: int = 64
    seed: int = 0
    eval_every: int = 50

    def validate(self):
        if self.task not in TASKS:
            raise ConfigurationError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.learner_kind not in LEARNER_KINDS:
            raise ConfigurationError(
                f"learner must be one of {LEARNER_KINDS}, got {self.learner_kind!r}"
            )
        if self.learner_kind == "gnn" and self.task != "refinement":
            raise ConfigurationError("gnn learner is only available in refinement mode")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigurationError(f"tau must be in [0, 1], got {self.tau}")
        if self.c < 1:
            raise ConfigurationError(f"bootstrap interval c must be >= 1, got {self.c}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        for name in ("p_x_learner", "p_x_anchor", "p_a"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {p}")
        if self.temperature <= 0.0:
            raise ConfigurationError(
                f"temperature must be positive, got {self.temperature}"
            )
        if self.lr <= 0.0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if self.d1 < 1 or self.d2 < 1:
            raise ConfigurationError(f"dims must be >= 1, got d1={self.d1} d2={self.d2}")
        if self.eval_every < 1:
            raise ConfigurationError(f"eval_every must be >= 1, got {self.eval_every}")
        return self


@dataclass
class TrainState:
    learner: object
    encoder: object
    projector: object
    anchor: np.ndarray
    moments: list
    iteration: int
    rng: np.random.Generator


def init_anchor(task, A=None, n=None):
    """Anchor starts at the given graph (refinement) or identity (inference)."""
    if task == "refinement":
        if A is None:
            raise ConfigurationError("refinement requires an input adjacency")
        A = tensor.as_matrix(A, "adjacency")
        if not np.array_equal(A, A.T):
            raise ContractError("anchor adjacency must be symmetric")
        if (A < 0).any():
            raise ContractError("anchor adjacency must be nonnegative")
        return A.copy()
    if task == "inference":
        if n is None:
            raise ConfigurationError("inference anchor needs the node count")
        return np.eye(n)
    raise ConfigurationError(f"task must be one of {TASKS}, got {task!r}")


def bootstrap_update(A_a, S, tau):
    """A_a <- tau * A_a + (1 - tau) * S, elementwise."""
    A_a = np.asarray(A_a, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    if A_a.shape != S.shape:
        raise ContractError(f"shape mismatch: {A_a.shape} vs {S.shape}")
    if tau == 1.0:
        return A_a.copy()
    if tau == 0.0:
        return S.copy()
    return tau * A_a + (1.0 - tau) * S


def adam_step(params, grads, moments, lr, iteration,
              beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, in place.

    moments is a list of (m, v) pairs parallel to params; pass an empty
    list on the first call and it is filled with zeros.
    """
    if not moments:
        moments.extend(
            (np.zeros_like(p.value), np.zeros_like(p.value)) for p in params
        )
    bc1 = 1.0 - beta1**iteration
    bc2 = 1.0 - beta2**iteration
    for i, (p, g) in enumerate(zip(params, grads)):
        m, v = moments[i]
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        moments[i] = (m, v)
        p.value = p.value - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params


def _grad_norms(params):
    return {f"param{i}": float(np.linalg.norm(p.grad)) for i, p in enumerate(params)}


def train(dataset, cfg):
    """Run the full loop; returns (S, model, log_lines).

    S is the final post-processed adjacency computed from the trained
    parameters with no augmentation. log_lines is one string per
    iteration: `iter=<i> loss=<float> anchor_delta=<float>` where
    anchor_delta is the largest entry change of the anchor at that
    iteration's bootstrap (0 when none happened).
    """
    cfg.validate()
    X = tensor.as_matrix(dataset.X, "features")
    n, d = X.shape
    if cfg.task == "refinement" and dataset.A is None:
        raise ConfigurationError("refinement requires a dataset with edges")

    rng = np.random.default_rng(cfg.seed)
    learner = init_learner(cfg.learner_kind, X, A=dataset.A, k=cfg.k)
    encoder = init_encoder(d, cfg.d1, rng)
    projector = init_projector(cfg.d1, cfg.d2, rng)
    anchor = init_anchor(cfg.task, A=dataset.A, n=n)
    params = learner.params + encoder.params + projector.params
    state = TrainState(
        learner=learner, encoder=encoder, projector=projector,
        anchor=anchor, moments=[], iteration=0, rng=rng,
    )

    lines = []
    for it in range(1, cfg.epochs + 1):
        state.iteration = it
        sketch = learner.forward(X)
        s_node = process(sketch, cfg.k, cfg.learner_kind)

        draw_l = draw_masks(n, d, cfg.p_a, cfg.p_x_learner, rng)
        draw_a = draw_masks(n, d, cfg.p_a, cfg.p_x_anchor, rng)
        view_l = apply_masks(s_node, X, draw_l)
        view_a = apply_masks(state.anchor, X, draw_a)

        z_l = mlp_project(gcn_encode(view_l, encoder), projector)
        z_a = mlp_project(gcn_encode(view_a, encoder), projector)
        loss = nt_xent(z_l, z_a, cfg.temperature)
        loss_val = float(loss.value[0, 0])
        # a blown-up learner can keep the loss finite (zeroed embeddings give
        # exactly log n), so the learned structure is checked as well
        if not np.isfinite(loss_val) or not np.isfinite(s_node.value).all():
            raise TrainingDiverged(it, loss_val, _grad_norms(params))

        tensor.backward(loss, params)
        adam_step(params, [p.grad for p in params], state.moments, cfg.lr, it)

        delta = 0.0
        if it % cfg.c == 0 and cfg.tau < 1.0:
            new_anchor = bootstrap_update(state.anchor, s_node.value, cfg.tau)
            delta = float(np.abs(new_anchor - state.anchor).max())
            state.anchor = new_anchor

        line = f"iter={it} loss={loss_val} anchor_delta={delta}"
        lines.append(line)
        if it == 1 or it == cfg.epochs or it % cfg.eval_every == 0:
            log.info(line)

    final = process(learner.forward(X), cfg.k, cfg.learner_kind).value
    model = ContrastiveModel(encoder=encoder, projector=projector)
    return final, model, lines
