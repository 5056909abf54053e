"""Train-and-evaluate glue shared by the comparison table and the CLI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .ingest import EncodedDataset
from .nn import Network, build_cnn, init_params
from .trainer import TrainConfig, accuracy_at, predict, train


@dataclass
class CnnRun:
    net: Network
    logs: list
    report: metrics.MetricsReport
    train_acc: float
    test_probs: np.ndarray


def run_cnn(dataset: EncodedDataset, config: TrainConfig, net: Network | None = None) -> CnnRun:
    """Initialize (from ``config.seed``), train and evaluate the CNN."""
    if net is None:
        net = build_cnn(dataset.vocab_size, dropout_p=config.dropout_p)
        net = init_params(net, config.seed)
    x_tr, y_tr = dataset.train("int")
    x_te, y_te = dataset.test("int")
    net, logs = train(net, x_tr, y_tr, x_te, y_te, config)
    probs = predict(net, x_te)
    return CnnRun(net, logs, metrics.evaluate(y_te, probs), accuracy_at(net, x_tr, y_tr), probs)
