"""Learn graph adjacency structure from node features by contrastive
agreement with a self-bootstrapped anchor graph, then evaluate it on
node classification and clustering."""

from .contrast import ContrastiveModel, Encoder, Projector, gcn_encode, mlp_project, nt_xent
from .data import (
    Dataset,
    build_knn_graph,
    load_adjacency,
    load_dataset,
    perturb_edges,
    save_adjacency,
)
from .evaluate import classification_accuracy, eval_classify, eval_cluster
from .learners import (
    AttentiveLearner,
    FgpLearner,
    GnnLearner,
    MlpLearner,
    fgp_forward,
    gnn_propagate,
    init_learner,
    metric_forward,
)
from .postprocess import activate_symmetrize, normalize_sym, process, topk_sparsify
from .training import TrainConfig, TrainState, adam_step, bootstrap_update, init_anchor, train

__version__ = "0.1.0"

__all__ = [
    "AttentiveLearner",
    "ContrastiveModel",
    "Dataset",
    "Encoder",
    "FgpLearner",
    "GnnLearner",
    "MlpLearner",
    "Projector",
    "TrainConfig",
    "TrainState",
    "activate_symmetrize",
    "adam_step",
    "bootstrap_update",
    "build_knn_graph",
    "classification_accuracy",
    "eval_classify",
    "eval_cluster",
    "fgp_forward",
    "gcn_encode",
    "init_anchor",
    "init_learner",
    "load_adjacency",
    "load_dataset",
    "metric_forward",
    "mlp_project",
    "normalize_sym",
    "nt_xent",
    "perturb_edges",
    "process",
    "save_adjacency",
    "topk_sparsify",
    "train",
]
