"""Comparison classifiers on the standardized features and the comparison table."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields

import numpy as np

from . import metrics
from .ingest import EncodedDataset
from .nn import build_mlp, sigmoid
from .pipeline import run_cnn
from .trainer import TrainConfig, accuracy_at, predict, train

VAR_FLOOR = 1e-9


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------

@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    loss_history: list

    def predict_proba(self, x):
        return sigmoid(np.asarray(x, dtype=np.float64) @ self.weights + self.bias)


def logreg_train(x, y, epochs: int = 500, lr: float = 0.1, seed: int = 0) -> LogisticModel:
    """Full-batch gradient descent on mean BCE from a zero start.

    ``seed`` is accepted for interface symmetry; the procedure is
    deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.zeros(x.shape[1])
    b = 0.0
    history = []
    n = x.shape[0]
    for _ in range(epochs):
        p = sigmoid(x @ w + b)
        pc = np.clip(p, 1e-12, 1 - 1e-12)
        loss = -float(np.mean(y * np.log(pc) + (1 - y) * np.log1p(-pc)))
        if not np.isfinite(loss):
            raise FloatingPointError("logistic regression diverged")
        history.append(loss)
        r = (p - y) / n
        w = w - lr * (x.T @ r)
        b = b - lr * float(r.sum())
    return LogisticModel(w, b, history)


# ---------------------------------------------------------------------------
# Gaussian naive Bayes
# ---------------------------------------------------------------------------

@dataclass
class GnbModel:
    priors: np.ndarray  # (2,)
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)

    def log_joint(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        ll = -0.5 * (
            np.log(2 * np.pi * self.variances)[None] + (x[:, None, :] - self.means[None]) ** 2 / self.variances[None]
        ).sum(axis=2)
        return ll + np.log(self.priors)[None]

    def posteriors(self, x):
        """(n, 2) class posteriors via a stable log-sum-exp."""
        lj = self.log_joint(x)
        lj -= lj.max(axis=1, keepdims=True)
        e = np.exp(lj)
        return e / e.sum(axis=1, keepdims=True)

    def predict_proba(self, x):
        return self.posteriors(x)[:, 1]


def gnb_train(x, y, var_floor: float = VAR_FLOOR) -> GnbModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise ValueError("Gaussian NB needs both classes in the training set")
    priors, means, variances = [], [], []
    for c in (0, 1):
        xc = x[y == c]
        priors.append(xc.shape[0] / x.shape[0])
        means.append(xc.mean(axis=0))
        variances.append(np.maximum(xc.var(axis=0), var_floor))
    return GnbModel(np.array(priors), np.array(means), np.array(variances))


def gnb_predict(model: GnbModel, x):
    return model.predict_proba(x)


# ---------------------------------------------------------------------------
# comparison table
# ---------------------------------------------------------------------------

@dataclass
class ComparisonRow:
    algorithm: str
    train_acc: float
    test_acc: float
    precision: float
    recall: float
    f1: float
    auc: float
    split: str = ""
    source: str = "computed"


# Rows not re-implemented here, as printed in the original comparison table.
PAPER_REPORTED = [
    ("SVM", 92.56, 80.32, 85.0, 65.3, 73.9, 78.4),
    ("Decision Tree", 100.0, 77.04, 73.07, 73.07, 73.07, 76.53),
    ("Random Forest", 99.17, 77.04, 77.23, 65.38, 70.83, 75.54),
    ("LightGBM", 99.58, 77.04, 83.33, 57.69, 68.18, 74.56),
    ("XGBoost", 100.0, 78.68, 84.21, 61.53, 71.11, 76.48),
]


def _row(name, train_acc, y_test, probs, fingerprint):
    rep = metrics.evaluate(y_test, probs)
    return ComparisonRow(name, train_acc, rep.accuracy, rep.precision, rep.recall, rep.f1, rep.auc, fingerprint)


def mlp_baseline(dataset: EncodedDataset, config: TrainConfig, hidden: int = 16):
    """13 -> hidden ReLU -> 1 sigmoid on standardized features, trained with Adam."""
    x_tr, y_tr = dataset.train("std")
    x_te, y_te = dataset.test("std")
    net = build_mlp(x_tr.shape[1], hidden, seed=config.seed)
    net, logs = train(net, x_tr, y_tr, x_te, y_te, config)
    row = _row("Artificial Neural Network", accuracy_at(net, x_tr, y_tr), y_te, predict(net, x_te),
               dataset.split.fingerprint())
    return row, logs


def compare(dataset: EncodedDataset, cnn_config: TrainConfig | None = None,
            mlp_config: TrainConfig | None = None, logreg_epochs: int = 500, logreg_lr: float = 0.1,
            include_paper_rows: bool = True) -> list[ComparisonRow]:
    """All computed rows share ``dataset.split``; annotation rows are appended last."""
    cnn_config = cnn_config or TrainConfig()
    mlp_config = mlp_config or TrainConfig(seed=cnn_config.seed, dropout_p=0.0)
    fp = dataset.split.fingerprint()
    x_tr, y_tr = dataset.train("std")
    x_te, y_te = dataset.test("std")

    rows = []
    lr = logreg_train(x_tr, y_tr, logreg_epochs, logreg_lr)
    rows.append(_row("Logistic Regression", _acc(lr.predict_proba(x_tr), y_tr), y_te, lr.predict_proba(x_te), fp))
    nb = gnb_train(x_tr, y_tr)
    rows.append(_row("Naive Bayes", _acc(nb.predict_proba(x_tr), y_tr), y_te, nb.predict_proba(x_te), fp))
    rows.append(mlp_baseline(dataset, mlp_config)[0])
    run = run_cnn(dataset, cnn_config)
    rep = run.report
    rows.append(ComparisonRow("Proposed Architecture (1D CNN)", run.train_acc, rep.accuracy, rep.precision,
                              rep.recall, rep.f1, rep.auc, fp))
    if include_paper_rows:
        for name, *vals in PAPER_REPORTED:
            rows.append(ComparisonRow(name, *(v / 100 for v in vals), split="", source="paper-reported"))
    return rows


def _acc(probs, y):
    return float(np.mean((probs >= 0.5) == np.asarray(y)))


COLUMNS = [f.name for f in fields(ComparisonRow)]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in astuple(r)])
    return buf.getvalue()


def rows_to_text(rows) -> str:
    """Aligned plain-text table, percentages with two decimals."""
    header = ["Algorithm", "Training Accuracy", "Test Accuracy", "Precision", "Recall", "F1 Score", "AUC", "Source"]
    body = [
        [r.algorithm, *(f"{100 * v:.2f}" for v in (r.train_acc, r.test_acc, r.precision, r.recall, r.f1, r.auc)),
         r.source]
        for r in rows
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = []
    for row in [header, *body]:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:-1], widths[1:-1])]
        cells.append(row[-1].ljust(widths[-1]))
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"
