"""Confusion matrix, precision/recall/F1, ROC curve and AUC."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp


def _as_arrays(labels, scores):
    y = np.asarray(labels).reshape(-1)
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if y.shape != s.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} labels, {s.shape[0]} scores")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return y.astype(np.int64), s


def confusion(labels, probabilities, threshold: float = 0.5) -> ConfusionMatrix:
    """Tally predictions; a probability equal to the threshold is positive."""
    y, s = _as_arrays(labels, probabilities)
    pred = s >= threshold
    return ConfusionMatrix(
        tn=int(np.sum(~pred & (y == 0))),
        fp=int(np.sum(pred & (y == 0))),
        fn=int(np.sum(~pred & (y == 1))),
        tp=int(np.sum(pred & (y == 1))),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def prf1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Precision, recall, F1; each is 0 where its denominator vanishes."""
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # score at which each point is reached; +inf for (0, 0)
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for f, t in self.points:
            w.writerow([repr(f), repr(t)])
        return buf.getvalue()


def roc(labels, scores) -> RocCurve:
    """ROC points at every distinct score (descending) and trapezoidal AUC.

    Tied scores become a single point, so a tie between a positive and a
    negative contributes half a unit of area.
    """
    y, s = _as_arrays(labels, scores)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one positive and one negative label")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last position of each run of equal scores
    ends = np.r_[np.nonzero(np.diff(s))[0], y.size - 1]
    tps = np.cumsum(y)[ends]
    fps = (ends + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    thresholds = np.r_[np.inf, s[ends]]
    area = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, area)


def auc(labels, scores) -> float:
    return roc(labels, scores).auc


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    confusion: ConfusionMatrix

    def to_dict(self) -> dict:
        cm = self.confusion
        return {
            "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
            "f1": self.f1, "auc": self.auc, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn, "tp": cm.tp,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "MetricsReport":
        cm = ConfusionMatrix(int(d["tn"]), int(d["fp"]), int(d["fn"]), int(d["tp"]))
        return cls(d["accuracy"], d["precision"], d["recall"], d["f1"], d["auc"], cm)


def report_from_confusion(cm: ConfusionMatrix, auc_value: float) -> MetricsReport:
    p, r, f = prf1(cm)
    return MetricsReport(accuracy(cm), p, r, f, auc_value, cm)


def evaluate(labels, probabilities, threshold: float = 0.5) -> MetricsReport:
    cm = confusion(labels, probabilities, threshold)
    return report_from_confusion(cm, auc(labels, probabilities))
