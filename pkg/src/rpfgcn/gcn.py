"""Minimal two-layer graph convolutional network on dense numpy arrays.

Propagation: ``logits = A_hat @ relu(A_hat @ X @ W0) @ W1`` where
``A_hat`` is the self-loop symmetric normalization of the input graph.
Softmax lives inside the loss (log-sum-exp form), so ``forward`` returns
raw logits. Training is full-batch Adam on a masked cross-entropy plus
L2 weight decay, with early stopping on validation loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError, TrainingError
from .graph import WeightedGraph
from .linalg import as_matrix

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class GcnHyperparams:
    hidden: int = 16
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 200
    patience: int = 20
    dropout: float = 0.0
    bias: bool = True
    seed: int = 0


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Self-loop normalized adjacency ``D~^-1/2 (A + I) D~^-1/2``.

    ``matrix`` is a dense ndarray or a ``scipy.sparse.csr_array``; both
    support the ``@`` products the network needs.
    """

    matrix: np.ndarray | sp.csr_array
    n: int


@dataclass
class GcnModel:
    """Layer weights plus per-layer additive biases.

    Biases are zero-initialized and stay zero when ``hyper.bias`` is off.
    Without them the network is positively homogeneous (every decision
    surface passes through the feature-space origin), which cannot
    separate radially arranged classes; the usual GCN reference setup
    therefore carries them and so does this one.
    """

    W0: np.ndarray  # (d, hidden)
    W1: np.ndarray  # (hidden, c)
    b0: np.ndarray  # (hidden,)
    b1: np.ndarray  # (c,)
    hyper: GcnHyperparams


class Grads(NamedTuple):
    dW0: np.ndarray
    dW1: np.ndarray
    db0: np.ndarray
    db1: np.ndarray


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    test_accuracy: float = 0.0
    epochs_run: int = 0


def normalize_adjacency(g: WeightedGraph, sparse: bool | None = None) -> NormalizedAdjacency:
    """Add self-loops and symmetrically normalize by the augmented degrees.

    ``sparse=None`` picks CSR storage automatically for large sparse
    graphs; the arithmetic is the same either way, only the matmul
    backend changes.
    """
    if sparse is None:
        density = (2 * len(g.edges) + g.n) / (g.n * g.n)
        sparse = g.n >= 1000 and density < 0.05
    if not sparse:
        a = g.to_dense()
        np.fill_diagonal(a, a.diagonal() + 1.0)
        inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
        return NormalizedAdjacency(matrix=(inv_sqrt[:, None] * a) * inv_sqrt[None, :], n=g.n)
    n = g.n
    m = len(g.edges)
    rows = np.empty(2 * m + n, dtype=np.int64)
    cols = np.empty(2 * m + n, dtype=np.int64)
    vals = np.empty(2 * m + n)
    for e, ((i, j), w) in enumerate(sorted(g.edges.items())):
        rows[e], cols[e], vals[e] = i, j, w
        rows[m + e], cols[m + e], vals[m + e] = j, i, w
    rows[2 * m :] = np.arange(n)
    cols[2 * m :] = np.arange(n)
    vals[2 * m :] = 1.0  # self-loops
    degree = np.ones(n)
    np.add.at(degree, rows[:m], vals[:m])
    np.add.at(degree, cols[:m], vals[:m])
    inv_sqrt = 1.0 / np.sqrt(degree)
    vals *= inv_sqrt[rows] * inv_sqrt[cols]
    matrix = sp.csr_array((vals, (rows, cols)), shape=(n, n))
    return NormalizedAdjacency(matrix=matrix, n=n)


def _as_mask(mask, n: int) -> np.ndarray:
    m = np.asarray(mask, dtype=np.int64)
    if m.ndim != 1 or m.size == 0:
        raise ShapeError("mask must be a non-empty 1-D index array")
    if m.min() < 0 or m.max() >= n:
        raise ShapeError(f"mask indices out of range for n={n}")
    return m


def _propagation(a_hat):
    if isinstance(a_hat, NormalizedAdjacency):
        return a_hat.matrix
    if sp.issparse(a_hat):
        return a_hat
    return as_matrix(a_hat, "A_hat")


def forward(model: GcnModel, X, a_hat) -> tuple[np.ndarray, np.ndarray]:
    """Raw class logits and the post-ReLU hidden activations."""
    X = as_matrix(X, "X")
    a = _propagation(a_hat)
    if a.shape[0] != a.shape[1] or a.shape[0] != X.shape[0]:
        raise ShapeError(f"A_hat shape {a.shape} incompatible with X shape {X.shape}")
    if X.shape[1] != model.W0.shape[0] or model.W0.shape[1] != model.W1.shape[0]:
        raise ShapeError(
            f"weight shapes {model.W0.shape}, {model.W1.shape} incompatible with d={X.shape[1]}"
        )
    hidden = np.maximum(a @ (X @ model.W0) + model.b0, 0.0)
    logits = a @ (hidden @ model.W1) + model.b1
    return logits, hidden


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _masked_ce(logits: np.ndarray, y: np.ndarray, m: np.ndarray) -> float:
    log_p = _log_softmax(logits[m])
    return float(-log_p[np.arange(m.size), y[m]].mean())


def masked_cross_entropy(logits, labels, mask) -> float:
    """Mean negative log-likelihood over the masked nodes."""
    logits = as_matrix(logits, "logits")
    y = np.asarray(labels, dtype=np.int64)
    m = _as_mask(mask, logits.shape[0])
    return _masked_ce(logits, y, m)


def _loss_and_grads(W0, W1, b0, b1, X, a, y, m, weight_decay, drop_mask=None):
    """Loss plus analytic gradients for the masked objective.

    Objective: mean cross-entropy over masked nodes plus
    ``weight_decay/2 * (||W0||^2 + ||W1||^2)``; biases are not decayed.
    ``drop_mask`` is an optional inverted-dropout multiplier applied to
    the hidden layer.
    """
    pre = a @ (X @ W0) + b0
    hidden = np.maximum(pre, 0.0)
    if drop_mask is not None:
        hidden = hidden * drop_mask
    logits = a @ (hidden @ W1) + b1

    log_p = _log_softmax(logits[m])
    loss = float(-log_p[np.arange(m.size), y[m]].mean())
    loss += 0.5 * weight_decay * (float((W0 * W0).sum()) + float((W1 * W1).sum()))

    d_logits = np.zeros_like(logits)
    probs = np.exp(log_p)
    probs[np.arange(m.size), y[m]] -= 1.0
    d_logits[m] = probs / m.size

    db1 = d_logits.sum(axis=0)
    d_hw = a @ d_logits  # a is symmetric
    dW1 = hidden.T @ d_hw + weight_decay * W1
    d_hidden = d_hw @ W1.T
    if drop_mask is not None:
        d_hidden = d_hidden * drop_mask
    d_pre = np.where(pre > 0.0, d_hidden, 0.0)
    db0 = d_pre.sum(axis=0)
    dW0 = X.T @ (a @ d_pre) + weight_decay * W0
    return loss, Grads(dW0, dW1, db0, db1)


def gradients(model: GcnModel, X, a_hat, labels, mask) -> Grads:
    """Analytic gradients of the masked loss (plus weight decay).

    The leading two fields cover the layer weights; the bias gradients
    follow.
    """
    X = as_matrix(X, "X")
    a = _propagation(a_hat)
    y = np.asarray(labels, dtype=np.int64)
    m = _as_mask(mask, X.shape[0])
    _, grads = _loss_and_grads(
        model.W0, model.W1, model.b0, model.b1, X, a, y, m, model.hyper.weight_decay
    )
    return grads


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


def init_model(d: int, n_classes: int, hyper: GcnHyperparams) -> GcnModel:
    rng = np.random.default_rng(hyper.seed)
    return GcnModel(
        W0=glorot_uniform(rng, d, hyper.hidden),
        W1=glorot_uniform(rng, hyper.hidden, n_classes),
        b0=np.zeros(hyper.hidden),
        b1=np.zeros(n_classes),
        hyper=hyper,
    )


def train(dataset, masks, a_hat, hyper: GcnHyperparams) -> tuple[GcnModel, TrainReport]:
    """Full-batch Adam with early stopping on validation loss.

    Weights with the best validation loss seen are restored at the end
    (when a validation set exists). Deterministic given ``hyper.seed``.
    Raises ``TrainingError`` with the epoch index if the loss goes
    non-finite.
    """
    X = as_matrix(dataset.X, "X")
    a = _propagation(a_hat)
    y = np.asarray(dataset.y, dtype=np.int64)
    train_m = _as_mask(masks.train, X.shape[0])
    val_m = np.asarray(masks.val, dtype=np.int64)
    model = init_model(X.shape[1], dataset.n_classes, hyper)
    report = TrainReport()

    rng = np.random.default_rng(np.random.SeedSequence([int(hyper.seed), 1]))
    params = [model.W0, model.W1]
    if hyper.bias:
        params += [model.b0, model.b1]
    moments = [np.zeros_like(p) for p in params]
    velocities = [np.zeros_like(p) for p in params]

    best_val = np.inf
    best_weights = None
    stale = 0
    # Divergence shows up as overflow before the NaN guard fires; keep
    # numpy quiet so the guard is the single reporting path.
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(hyper.epochs):
            drop_mask = None
            if hyper.dropout > 0.0:
                keep = 1.0 - hyper.dropout
                drop_mask = (rng.random((X.shape[0], hyper.hidden)) < keep) / keep
            loss, grads = _loss_and_grads(
                model.W0, model.W1, model.b0, model.b1, X, a, y, train_m,
                hyper.weight_decay, drop_mask,
            )
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}", epoch=epoch)
            t = epoch + 1
            for p, mom, vel, grad in zip(params, moments, velocities, grads):
                mom += (1.0 - ADAM_BETA1) * (grad - mom)
                vel += (1.0 - ADAM_BETA2) * (grad * grad - vel)
                m_hat = mom / (1.0 - ADAM_BETA1**t)
                v_hat = vel / (1.0 - ADAM_BETA2**t)
                p -= hyper.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)

            hidden = np.maximum(a @ (X @ model.W0) + model.b0, 0.0)
            logits = a @ (hidden @ model.W1) + model.b1
            if not np.isfinite(logits).all():
                raise TrainingError(f"non-finite logits at epoch {epoch}", epoch=epoch)
            report.train_loss.append(_masked_ce(logits, y, train_m))
            report.epochs_run = epoch + 1
            if val_m.size:
                vl = _masked_ce(logits, y, val_m)
                report.val_loss.append(vl)
                val_pred = np.argmax(logits[val_m], axis=1)
                report.val_accuracy.append(float((val_pred == y[val_m]).mean()))
                if vl < best_val:
                    best_val = vl
                    best_weights = [p.copy() for p in (model.W0, model.W1, model.b0, model.b1)]
                    stale = 0
                else:
                    stale += 1
                    if stale >= hyper.patience:
                        break
    if best_weights is not None:
        model.W0, model.W1, model.b0, model.b1 = best_weights
    if masks.test is not None and np.asarray(masks.test).size:
        report.test_accuracy = evaluate(model, X, a, y, np.asarray(masks.test, dtype=np.int64))
    return model, report


def evaluate(model: GcnModel, X, a_hat, labels, mask) -> float:
    """Fraction of masked nodes whose argmax logit matches the label."""
    y = np.asarray(labels, dtype=np.int64)
    m = _as_mask(mask, np.asarray(X).shape[0])
    logits, _ = forward(model, X, a_hat)
    pred = np.argmax(logits[m], axis=1)  # ties resolve to the lowest class
    return float((pred == y[m]).mean())


def save_model(model: GcnModel, path) -> None:
    """Binary checkpoint (npz): exact float64 round-trip of all parameters."""
    np.savez(
        path,
        W0=model.W0,
        W1=model.W1,
        b0=model.b0,
        b1=model.b1,
        hyper=np.frombuffer(json.dumps(model.hyper.__dict__).encode(), dtype=np.uint8),
    )


def load_model(path) -> GcnModel:
    with np.load(path) as data:
        hyper = GcnHyperparams(**json.loads(bytes(data["hyper"]).decode()))
        return GcnModel(
            W0=data["W0"].copy(),
            W1=data["W1"].copy(),
            b0=data["b0"].copy(),
            b1=data["b1"].copy(),
            hyper=hyper,
        )
