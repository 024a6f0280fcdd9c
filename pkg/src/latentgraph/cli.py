"""Command line interface.

Subcommands:

  infer    learn a structure from features alone (anchor = identity)
  refine   refine a given noisy structure (anchor = input graph)
  eval     score an adjacency (saved, identity, or the dataset's own)
  perturb  write a copy of a dataset with randomly deleted/added edges

Runs are configured by flat `key = value` files with a strict schema;
`--seed` and `--out` flags override the file. Every command writes its
artifacts into the output directory and exits 0 only when all of them
landed. LG_LOG_LEVEL (error|info|debug) controls console verbosity.
"""

import argparse
import json
import logging
import os
import shutil
import sys

import numpy as np

from .data import load_adjacency, load_dataset, perturb_edges, save_adjacency
from .errors import ConfigurationError, ContractError, ParseError, TrainingDiverged
from .evaluate import eval_classify, eval_cluster
from .training import TrainConfig, train

log = logging.getLogger("latentgraph")


class UsageError(Exception):
    """Bad invocation or bad config: exits with code 2."""


_CONFIG_KEYS = {
    "task": str,
    "dataset": str,
    "learner": str,
    "k": int,
    "tau": float,
    "c": int,
    "p_x_learner": float,
    "p_x_anchor": float,
    "p_a": float,
    "temperature": float,
    "epochs": int,
    "lr": float,
    "d1": int,
    "d2": int,
    "seed": int,
    "eval_every": int,
    "eval_seeds": str,
    "out": str,
}


def parse_config(path):
    """Read a flat `key = value` file into a dict, strictly."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    values = {}
    unknown = []
    for ln, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{ln}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CONFIG_KEYS:
            unknown.append(key)
            continue
        try:
            values[key] = _CONFIG_KEYS[key](raw)
        except ValueError:
            raise UsageError(
                f"{path}:{ln}: bad value {raw!r} for key {key!r}"
            ) from None
    if unknown:
        raise UsageError(f"{path}: unknown config keys: {', '.join(sorted(unknown))}")
    return values


def _parse_eval_seeds(raw):
    try:
        seeds = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"bad eval_seeds value {raw!r}") from None
    if not seeds:
        raise UsageError("eval_seeds must list at least one seed")
    return seeds


def _build_run(args, expected_task):
    values = parse_config(args.config)
    if args.seed is not None:
        values["seed"] = args.seed
    task = values.get("task", expected_task)
    if task != expected_task:
        raise UsageError(
            f"config sets task={task!r} but this command runs {expected_task!r}"
        )
    if "dataset" not in values:
        raise UsageError("config must set a dataset directory")
    eval_seeds = _parse_eval_seeds(values.get("eval_seeds", "0,1,2,3,4"))
    out_dir = args.out or values.get("out") or f"runs/{task}"
    cfg_kwargs = {
        key: values[key]
        for key in (
            "k", "tau", "c", "p_x_learner", "p_x_anchor", "p_a", "temperature",
            "epochs", "lr", "d1", "d2", "seed", "eval_every",
        )
        if key in values
    }
    if "learner" in values:
        cfg_kwargs["learner_kind"] = values["learner"]
    cfg = TrainConfig(task=expected_task, **cfg_kwargs)
    return values["dataset"], cfg, eval_seeds, out_dir


def _write_metrics(out_dir, payload):
    path = os.path.join(out_dir, "metrics.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _run_training(args, task, cluster=False):
    dataset_dir, cfg, eval_seeds, out_dir = _build_run(args, task)
    dataset = load_dataset(dataset_dir)
    if task == "refinement" and dataset.A is None:
        raise ConfigurationError(
            f"refinement needs {os.path.join(dataset_dir, 'edges.tsv')}"
        )
    os.makedirs(out_dir, exist_ok=True)
    log.info("training %s on %s", task, dataset.name)
    S, model, lines = train(dataset, cfg)
    with open(os.path.join(out_dir, "train.log"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    save_adjacency(S, os.path.join(out_dir, "learned_adjacency.tsv"))
    stats = eval_classify(S, dataset, seeds=eval_seeds)
    payload = {
        "task": task,
        "dataset": dataset.name,
        "seeds": stats["seeds"],
        "per_seed": stats["per_seed"],
        "mean": stats["mean"],
        "std": stats["std"],
    }
    if cluster:
        payload["clustering"] = eval_cluster(model, S, dataset.X, dataset.y)
    _write_metrics(out_dir, payload)
    log.info("accuracy mean=%.4f std=%.4f", stats["mean"], stats["std"])
    return 0


def cmd_infer(args):
    return _run_training(args, "inference")


def cmd_refine(args):
    return _run_training(args, "refinement", cluster=args.cluster)


def cmd_eval(args):
    dataset_dir, cfg, eval_seeds, out_dir = _build_run(args, args_task(args))
    dataset = load_dataset(dataset_dir)
    source = args.adjacency
    if source == "identity":
        S = np.eye(dataset.n_nodes)
    elif source == "dataset":
        if dataset.A is None:
            raise ConfigurationError("dataset has no edges.tsv to evaluate")
        S = dataset.A
    else:
        S = load_adjacency(source)
    os.makedirs(out_dir, exist_ok=True)
    stats = eval_classify(S, dataset, seeds=eval_seeds)
    _write_metrics(out_dir, {
        "task": cfg.task,
        "dataset": dataset.name,
        "adjacency": source,
        "seeds": stats["seeds"],
        "per_seed": stats["per_seed"],
        "mean": stats["mean"],
        "std": stats["std"],
    })
    log.info("accuracy mean=%.4f std=%.4f", stats["mean"], stats["std"])
    return 0


def args_task(args):
    values = parse_config(args.config)
    task = values.get("task")
    if task not in ("inference", "refinement"):
        raise UsageError("config must set task = inference|refinement")
    return task


def cmd_perturb(args):
    if not 0.0 <= args.rate <= 0.9:
        raise UsageError(f"rate must be in [0, 0.9], got {args.rate}")
    if args.mode not in ("delete", "add"):
        raise UsageError(f"mode must be delete or add, got {args.mode!r}")
    dataset = load_dataset(args.dataset_dir)
    if dataset.A is None:
        raise ConfigurationError("dataset has no edges.tsv to perturb")
    rng = np.random.default_rng(args.seed)
    perturbed = perturb_edges(dataset.A, args.rate, args.mode, rng)
    os.makedirs(args.out, exist_ok=True)
    for name in ("features.tsv", "labels.tsv", "splits.json"):
        shutil.copyfile(
            os.path.join(args.dataset_dir, name), os.path.join(args.out, name)
        )
    iu, ju = np.nonzero(np.triu(perturbed, k=1))
    with open(os.path.join(args.out, "edges.tsv"), "w", encoding="utf-8") as fh:
        for i, j in zip(iu, ju):
            fh.write(f"{i}\t{j}\t{perturbed[i, j]:.17g}\n")
    log.info("wrote perturbed dataset to %s", args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="latentgraph",
        description="Learn or refine graph structure from node features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to key=value config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="output directory")

    p_infer = sub.add_parser("infer", help="learn structure from features")
    add_common(p_infer)
    p_infer.set_defaults(func=cmd_infer)

    p_refine = sub.add_parser("refine", help="refine a given structure")
    add_common(p_refine)
    p_refine.add_argument(
        "--cluster", action="store_true",
        help="also report clustering metrics on encoder representations",
    )
    p_refine.set_defaults(func=cmd_refine)

    p_eval = sub.add_parser("eval", help="evaluate an adjacency on a dataset")
    add_common(p_eval)
    p_eval.add_argument(
        "adjacency",
        help="path to a saved adjacency, or 'identity' / 'dataset'",
    )
    p_eval.set_defaults(func=cmd_eval)

    p_pert = sub.add_parser("perturb", help="randomly delete or add edges")
    p_pert.add_argument("dataset_dir", help="source dataset directory")
    p_pert.add_argument("--mode", required=True, choices=("delete", "add"))
    p_pert.add_argument("--rate", required=True, type=float)
    p_pert.add_argument("--seed", type=int, default=0)
    p_pert.add_argument("--out", required=True, help="destination directory")
    p_pert.set_defaults(func=cmd_perturb)
    return parser


def _setup_logging():
    level_name = os.environ.get("LG_LOG_LEVEL", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        raise UsageError(
            f"LG_LOG_LEVEL must be one of {sorted(levels)}, got {level_name!r}"
        )
    logging.basicConfig(level=levels[level_name], format="%(message)s")
    log.setLevel(levels[level_name])


def main(argv=None):
    try:
        _setup_logging()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ParseError, ConfigurationError, ContractError, TrainingDiverged) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
