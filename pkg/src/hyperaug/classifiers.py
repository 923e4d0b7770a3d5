"""Supervised hypernymy classifiers: L2 logistic regression and a 3-layer
feedforward network, with pair-aggregation featurization and grid search."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import PairDataset, stratified_folds
from .errors import DataError, ShapeError
from .nn import (ACTIVATION_LAYERS, Adam, CE_WITH_SOFTMAX, DenseLayer,
                 DropoutLayer, Sequential, ce_with_softmax, sigmoid)

AGGREGATIONS = ("diff", "asym", "concat_asym", "hyper_only")

# output dimension as a multiple of the embedding dimension
AGGREGATION_DIM_FACTOR = {"diff": 1, "asym": 2, "concat_asym": 4, "hyper_only": 1}


def aggregate(kind: str, hypo, hyper):
    """Map an embedding pair (or batch of pairs) to a feature vector.

    diff -> hypo - hyper; asym -> concat(diff, diff^2);
    concat_asym -> concat(hypo, hyper, diff, diff^2); hyper_only -> hyper.
    """
    hypo = np.asarray(hypo, dtype=np.float64)
    hyper = np.asarray(hyper, dtype=np.float64)
    if hypo.shape != hyper.shape:
        raise ShapeError(f"pair shapes differ: {hypo.shape} vs {hyper.shape}")
    diff = hypo - hyper
    if kind == "diff":
        return diff
    if kind == "asym":
        return np.concatenate([diff, diff ** 2], axis=-1)
    if kind == "concat_asym":
        return np.concatenate([hypo, hyper, diff, diff ** 2], axis=-1)
    if kind == "hyper_only":
        return hyper.copy()
    raise ValueError(f"unknown aggregation kind {kind!r}")


def featurize_pairs(pairs, space, kind: str):
    """Feature matrix + label vector for in-vocabulary LabeledPairs."""
    hypos = np.array([space.vector(p.hyponym) for p in pairs])
    hypers = np.array([space.vector(p.hypernym) for p in pairs])
    labels = np.array([1 if p.label else 0 for p in pairs])
    return aggregate(kind, hypos, hypers), labels


# --------------------------------------------------------- logistic regression

@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2_strength: float
    converged: bool = False
    n_iter: int = 0

    def decision(self, features):
        return np.asarray(features) @ self.weights + self.bias

    def predict(self, features):
        return (sigmoid(self.decision(features)) >= 0.5).astype(int)


def _lr_objective(X, y, w, b, l2):
    z = X @ w + b
    # stable mean BCE in logit space
    loss = np.mean(np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z))))
    return loss + 0.5 * l2 * (w @ w)


def lr_fit(features, labels, l2_strength: float = 0.0, tol: float = 1e-6,
           max_iter: int = 1000) -> LogisticModel:
    """L2 logistic regression by full-batch gradient descent with backtracking.

    The bias is unregularized. Converged when the gradient infinity-norm
    drops below tol; otherwise stops at max_iter with converged=False.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError("features must be [n x d] with one label per row")
    if len(np.unique(y)) < 2:
        raise DataError("need at least one example of each class")
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = sigmoid(X @ w + b)
        g_w = X.T @ (p - y) / n + l2_strength * w
        g_b = float(np.mean(p - y))
        gnorm = max(np.abs(g_w).max(), abs(g_b))
        if gnorm < tol:
            converged = True
            break
        f0 = _lr_objective(X, y, w, b, l2_strength)
        g_sq = g_w @ g_w + g_b * g_b
        t = min(step * 2.0, 1e4)  # allow recovery after a cautious step
        while t > 1e-12:
            w_new = w - t * g_w
            b_new = b - t * g_b
            if _lr_objective(X, y, w_new, b_new, l2_strength) <= f0 - 1e-4 * t * g_sq:
                break
            t *= 0.5
        w, b, step = w_new, b_new, t
    return LogisticModel(weights=w, bias=b, l2_strength=l2_strength,
                         converged=converged, n_iter=it)


# --------------------------------------------------------- feedforward network

@dataclass
class FeedforwardSpec:
    hidden_sizes: tuple = (200, 100, 50)
    activation: str = "tanh"
    dropout: float = 0.0
    aggregation: str = "concat_asym"

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        if len(self.hidden_sizes) != 3:
            raise ValueError("exactly 3 hidden layers required")
        if self.activation not in ACTIVATION_LAYERS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


@dataclass
class TrainSpec:
    epochs: int = 30
    early_stop_patience: int = 5
    validation_fraction: float = 0.1
    learning_rate: float = 0.01
    batch_size: int = 64
    seed: int = 0


class EarlyStopper:
    """Stop after `patience` consecutive epochs without improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = -1
        self.bad_epochs = 0

    def update(self, epoch: int, metric: float) -> bool:
        """Record an epoch metric; returns True when training should stop."""
        if metric > self.best:
            self.best = metric
            self.best_epoch = epoch
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        return self.bad_epochs >= self.patience


@dataclass
class FFModel:
    network: Sequential
    spec: FeedforwardSpec

    def logits(self, features):
        return self.network.forward(np.atleast_2d(features), train=False)

    def predict(self, features):
        return self.logits(features).argmax(axis=1)


def build_network(spec: FeedforwardSpec, in_dim: int, seed: int) -> Sequential:
    rng = np.random.default_rng(seed)
    layers = []
    prev = in_dim
    for i, h in enumerate(spec.hidden_sizes):
        layers.append(DenseLayer(prev, h, rng=rng))
        layers.append(ACTIVATION_LAYERS[spec.activation]())
        if spec.dropout > 0:
            layers.append(DropoutLayer(spec.dropout, seed=seed * 31 + i))
        prev = h
    layers.append(DenseLayer(prev, 2, rng=rng))  # 2-logit softmax output
    return Sequential(layers)


def ff_fit(spec: FeedforwardSpec, train: TrainSpec, features, labels):
    """Train the 3-layer feedforward classifier with ADAM and early stopping.

    Keeps the best-validation-accuracy snapshot; returns (FFModel, history)
    where history has one record per completed epoch.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=int)
    if X.shape[0] != y.shape[0]:
        raise ShapeError("one label per feature row required")
    n = X.shape[0]
    if n < 2 * train.batch_size and n < 4:
        raise DataError(f"too few examples ({n}) to train")
    rng = np.random.default_rng(train.seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(train.validation_fraction * n)))
    if n_val >= n:
        raise DataError("validation fraction leaves no training data")
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    X_tr, y_tr = X[tr_idx], y[tr_idx]
    X_val, y_val = X[val_idx], y[val_idx]

    network = build_network(spec, X.shape[1], seed=train.seed)
    opt = Adam(network.parameters(), learning_rate=train.learning_rate)
    stopper = EarlyStopper(train.early_stop_patience)
    best_params = [p.copy() for p in network.parameters()]
    history = []
    for epoch in range(train.epochs):
        order = rng.permutation(len(X_tr))
        losses = []
        for start in range(0, len(X_tr), train.batch_size):
            batch = order[start:start + train.batch_size]
            logits = network.forward(X_tr[batch], train=True)
            loss, grad = ce_with_softmax(logits, y_tr[batch])
            network.backward(grad)
            opt.step(network.gradients())
            losses.append(loss)
        val_logits = network.forward(X_val, train=False)
        val_acc = float((val_logits.argmax(axis=1) == y_val).mean())
        history.append({"epoch": epoch, "train_loss": float(np.mean(losses)),
                        "val_accuracy": val_acc})
        improved = val_acc > stopper.best
        should_stop = stopper.update(epoch, val_acc)
        if improved:
            best_params = [p.copy() for p in network.parameters()]
        if should_stop:
            break
    for p, saved in zip(network.parameters(), best_params):
        p[...] = saved
    return FFModel(network=network, spec=spec), history


def evaluate(model, features, labels) -> float:
    """Fraction of correct binary predictions."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=int)
    if X.shape[0] == 0:
        raise DataError("empty evaluation set")
    return float((model.predict(X) == y).mean())


# ----------------------------------------------------------------- grid search

def derive_seed(base_seed: int, *parts) -> int:
    """Stable 32-bit seed from a base seed and arbitrary index parts."""
    text = ":".join([str(base_seed)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "big")


def grid_search(dataset: PairDataset, space, grid, k: int = 10, seed: int = 0,
                train: TrainSpec | None = None):
    """Mean k-fold CV accuracy per FeedforwardSpec cell; best cell wins,
    ties broken by declaration order."""
    if train is None:
        train = TrainSpec()
    plan = stratified_folds(dataset, k, seed=seed)
    pairs = dataset.pairs
    table = []
    for ci, cell in enumerate(grid):
        fold_accs = []
        for fold in range(k):
            tr = [pairs[i] for i in plan.complement_indices(fold)]
            te = [pairs[i] for i in plan.fold_indices(fold)]
            X_tr, y_tr = featurize_pairs(tr, space, cell.aggregation)
            X_te, y_te = featurize_pairs(te, space, cell.aggregation)
            cell_train = replace(train, seed=derive_seed(seed, ci, fold))
            model, _ = ff_fit(cell, cell_train, X_tr, y_tr)
            fold_accs.append(evaluate(model, X_te, y_te))
        table.append({"cell_index": ci, "spec": cell,
                      "mean_accuracy": float(np.mean(fold_accs)),
                      "fold_accuracies": fold_accs})
    best = max(table, key=lambda row: row["mean_accuracy"])
    # max() keeps the first of equals, matching declaration order
    return best["spec"], table


def write_grid_table(table, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        max_folds = max(len(r["fold_accuracies"]) for r in table)
        writer.writerow(["cell_index", "hidden_sizes", "activation", "dropout",
                         "aggregation", "mean_accuracy"]
                        + [f"fold_{i}" for i in range(max_folds)])
        for r in table:
            s = r["spec"]
            writer.writerow([r["cell_index"],
                             "-".join(str(h) for h in s.hidden_sizes),
                             s.activation, s.dropout, s.aggregation,
                             f"{r['mean_accuracy']:.6f}"]
                            + [f"{a:.6f}" for a in r["fold_accuracies"]])
