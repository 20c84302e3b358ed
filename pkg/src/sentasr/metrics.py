"""Confusion-matrix bookkeeping and the two accuracy flavors.

wa is plain classification accuracy; ua is macro-averaged per-class
recall, which is what makes majority-class predictors look as bad as
they are under 100/C.
"""

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class ConfusionMatrix:
    """counts[t][p] = examples of true class t predicted as p."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("counts must be a square matrix")
        if (c < 0).any():
            raise ValueError("counts must be non-negative")
        self.counts = c

    @property
    def num_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())


def confusion(preds, labels, num_classes):
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError("preds and labels must be 1-D and equal length")
    if len(preds) and (preds.min() < 0 or preds.max() >= num_classes
                       or labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"class ids must lie in [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts)


def wa(m):
    """Weighted accuracy: percent of all examples labeled correctly."""
    if m.total == 0:
        raise ValueError("empty confusion matrix")
    return float(100.0 * np.trace(m.counts) / m.total)


def ua(m):
    """Unweighted accuracy: macro-averaged per-class recall, in percent.

    Classes with no examples are excluded with a warning and the divisor
    shrinks accordingly.
    """
    row_sums = m.counts.sum(axis=1)
    present = row_sums > 0
    if not present.any():
        raise ValueError("empty confusion matrix")
    if not present.all():
        missing = np.flatnonzero(~present).tolist()
        warnings.warn(f"classes {missing} have no examples; "
                      "excluded from unweighted accuracy")
    diag = np.diag(m.counts)[present]
    recalls = diag / row_sums[present]
    return 100.0 * float(recalls.mean())


def per_class_recall(m):
    row_sums = m.counts.sum(axis=1)
    out = np.zeros(m.num_classes, dtype=np.float64)
    nz = row_sums > 0
    out[nz] = np.diag(m.counts)[nz] / row_sums[nz]
    return 100.0 * out


def report(m):
    """JSON-ready summary dict."""
    return {
        "wa": round(wa(m), 2),
        "ua": round(ua(m), 2),
        "confusion": m.counts.tolist(),
        "per_class_recall": [round(r, 2) for r in per_class_recall(m)],
    }
