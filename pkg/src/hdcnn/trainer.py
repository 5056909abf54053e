"""Binary cross-entropy, Adam, and the mini-batch training loop."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .nn import Network

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-12


class DivergenceError(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 150
    batch_size: int = 32
    learning_rate: float = 0.001
    alpha1: float = 0.9
    alpha2: float = 0.99
    eps: float = 1e-8
    dropout_p: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.alpha1 < 1 and 0 <= self.alpha2 < 1):
            raise ValueError("alpha1 and alpha2 must lie in [0, 1)")
        if not 0 <= self.dropout_p < 1:
            raise ValueError("dropout_p must lie in [0, 1)")

    def to_dict(self):
        return asdict(self)


def bce_loss(p, y):
    """Mean binary cross-entropy and its gradient with respect to ``p``."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape[0]} predictions, {y.shape[0]} labels")
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    n = p.shape[0]
    loss = -float(np.mean(y * np.log(pc) + (1.0 - y) * np.log1p(-pc)))
    grad = (pc - y) / (pc * (1.0 - pc)) / n
    return loss, grad


@dataclass
class AdamState:
    mu: list  # first moments
    v: list  # second moments
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state: AdamState, lr=0.001, alpha1=0.9, alpha2=0.99, eps=1e-8):
    """One in-place Adam update with epsilon under the square root.

    W <- W - lr * mu_hat / sqrt(v_hat + eps)
    """
    if len(params) != len(grads) or len(params) != len(state.mu):
        raise ValueError("params, grads and state disagree in length")
    state.t += 1
    c1 = 1.0 - alpha1 ** state.t
    c2 = 1.0 - alpha2 ** state.t
    for w, g, mu, v in zip(params, grads, state.mu, state.v):
        mu *= alpha1
        mu += (1.0 - alpha1) * g
        v *= alpha2
        v += (1.0 - alpha2) * (g * g)
        w -= lr * (mu / c1) / np.sqrt(v / c2 + eps)
    return params, state


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float


def predict(net: Network, x, batch_size: int = 256) -> np.ndarray:
    """Eval-mode probabilities as a flat array."""
    x = np.asarray(x)
    out = [net.predict(x[i: i + batch_size]) for i in range(0, x.shape[0], batch_size)]
    return np.concatenate(out).reshape(-1)


def accuracy_at(net, x, y, threshold=0.5) -> float:
    if len(y) == 0:
        return float("nan")
    return float(np.mean((predict(net, x) >= threshold) == np.asarray(y)))


def train(net: Network, x_train, y_train, x_test, y_test, config: TrainConfig):
    """Mini-batch Adam on mean BCE; returns a trained copy and per-epoch logs.

    A single generator seeded with ``config.seed`` drives both the per-epoch
    shuffles and the dropout masks, so the result is a pure function of
    (initial network, data, config).
    """
    x_train, y_train = np.asarray(x_train), np.asarray(y_train, dtype=np.float64)
    if x_train.shape[0] == 0:
        raise ValueError("empty training set")
    net = net.copy()
    rng = np.random.default_rng(config.seed)
    params = net.parameters()
    state = AdamState.zeros_like(params)
    n = x_train.shape[0]
    logs = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start: start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            p, cache = net.forward(xb, train=True, rng=rng)
            loss, _ = bce_loss(p, yb)
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}, step {state.t + 1}")
            # fused sigmoid + BCE gradient w.r.t. the logit
            dlogit = (p.reshape(-1) - yb).reshape(p.shape) / len(idx)
            grads = net.backward(cache, dlogit, wrt="logit")
            adam_step(params, grads, state, config.learning_rate, config.alpha1, config.alpha2, config.eps)
            total += loss * len(idx)
        entry = EpochLog(epoch, total / n, accuracy_at(net, x_train, y_train), accuracy_at(net, x_test, y_test))
        logs.append(entry)
        log.debug("epoch %d loss %.4f train %.4f test %.4f", *asdict(entry).values())
    return net, logs


def epochs_csv(logs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "train_loss", "train_acc", "test_acc"])
    for e in logs:
        w.writerow([e.epoch, f"{e.train_loss:.6f}", f"{e.train_acc:.6f}", f"{e.test_acc:.6f}"])
    return buf.getvalue()
