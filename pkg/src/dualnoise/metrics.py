"""Accuracy and noise-detection AUROC."""
from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from .errors import ShapeError, UndefinedMetricError


def accuracy(mean_probs, true_labels) -> float:
    mean_probs = np.asarray(mean_probs)
    true_labels = np.asarray(true_labels)
    if mean_probs.shape[0] != true_labels.shape[0]:
        raise ShapeError("one label per row required")
    # np.argmax returns the first maximum, i.e. the lowest class index on ties
    return float(np.mean(np.argmax(mean_probs, axis=1) == true_labels))


def auroc(scores, positive_flags) -> float:
    """AUROC of ``scores`` as a detector of ``positive_flags``, where LOW scores flag positives.

    Mann-Whitney form: the probability that a random positive scores strictly
    below a random negative, ties counted as 1/2.
    """
    scores = np.asarray(scores, dtype=np.float64)
    flags = np.asarray(positive_flags).astype(bool)
    if scores.shape != flags.shape:
        raise ShapeError("scores and flags must have the same shape")
    n_pos = int(flags.sum())
    n_neg = flags.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs at least one positive and one negative sample")
    ranks = rankdata(-scores)  # average ranks on ties
    u = ranks[flags].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def filter_quality(report, y_noisy, x_noisy) -> tuple[float, float]:
    """``(AUROC of L-Con vs label noise, AUROC of M-Con vs image noise)``."""
    return auroc(report.l_con, y_noisy), auroc(report.m_con, x_noisy)
