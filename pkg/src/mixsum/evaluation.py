"""Scores against a known truth: Hellinger distance, ARI and classification error."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import comb

from .errors import ValidationError
from .reference_models import Dataset

log = logging.getLogger(__name__)

METRICS = ("hellinger", "ari", "err")


@dataclass(frozen=True)
class EvalScore:
    metric: str
    value: float
    se: float | None = None
    excluded: int = 0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric {self.metric!r}")


def _logpdf_of(density):
    if hasattr(density, "logpdf"):
        return density.logpdf
    if callable(density):
        return density
    raise ValidationError("density must be callable or have a logpdf method")


def hellinger_mc(truth, candidate, samples_from_truth) -> EvalScore:
    """Monte Carlo Hellinger distance using samples from ``truth``.

    With y_s drawn from f, ``1 - H^2 = E_f[sqrt(g/f)]`` is estimated by the
    sample mean of ``sqrt(g(y_s)/f(y_s))``.  The estimate is clamped to
    [0, 1]; the standard error follows from the delta method.  Points where
    ``f`` is zero are dropped and counted in ``excluded``.

    Parameters
    ----------
    truth, candidate : objects with ``logpdf`` or callables returning log-densities
    samples_from_truth : Dataset or array
    """
    X = samples_from_truth.points if isinstance(samples_from_truth, Dataset) else np.asarray(samples_from_truth, float)
    if X.ndim == 1:
        X = X[:, None]
    lf = np.asarray(_logpdf_of(truth)(X), dtype=float)
    lg = np.asarray(_logpdf_of(candidate)(X), dtype=float)
    keep = np.isfinite(lf)
    excluded = int((~keep).sum())
    if excluded:
        log.warning("%d sample(s) with zero truth density excluded", excluded)
    r = np.exp(0.5 * (lg[keep] - lf[keep]))
    if r.size == 0:
        raise ValidationError("no samples with positive truth density")
    bc = float(r.mean())
    h2 = max(0.0, 1.0 - bc)
    h = min(1.0, math.sqrt(h2))
    sd = float(r.std(ddof=1)) if r.size > 1 else 0.0
    se_inner = sd / math.sqrt(r.size)
    # dH/d(bc) = -1 / (2H); fall back to sqrt(se) when H is at 0
    se = se_inner / (2.0 * h) if h > 0 else math.sqrt(se_inner)
    return EvalScore("hellinger", h, se, excluded)


def _check_pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(f"label vectors must be 1-D of equal length, got {a.shape} and {b.shape}")
    return a, b


def contingency(a, b):
    a, b = _check_pair(a, b)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1 if ai.size else 0, bi.max() + 1 if bi.size else 0), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def adjusted_rand_index(a, b) -> EvalScore:
    """Pair-counting adjusted Rand index.

    When both partitions are trivial in the same way (so the expected index
    equals its maximum) the value is defined as 1.
    """
    table = contingency(a, b)
    n = int(table.sum())
    sum_ij = float(comb(table, 2).sum())
    sum_a = float(comb(table.sum(axis=1), 2).sum())
    sum_b = float(comb(table.sum(axis=0), 2).sum())
    total = comb(n, 2)
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return EvalScore("ari", 1.0)
    return EvalScore("ari", (sum_ij - expected) / (max_index - expected))


def classification_error(a, b) -> EvalScore:
    """Fraction misclassified under the best one-to-one matching of labels."""
    table = contingency(a, b)
    n = int(table.sum())
    if n == 0:
        raise ValidationError("empty label vectors")
    rows, cols = linear_sum_assignment(table, maximize=True)
    return EvalScore("err", 1.0 - table[rows, cols].sum() / n)


SCORE_COLUMNS = ("replicate", "N", "model", "metric", "value", "se")


def write_scores(rows, path):
    """Scores CSV. ``rows`` are dicts with keys replicate, N, model and an :class:`EvalScore` under ``score``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_COLUMNS)
        for r in rows:
            s = r["score"]
            w.writerow([r["replicate"], r["N"], r["model"], s.metric, repr(float(s.value)), "" if s.se is None else repr(float(s.se))])


def read_scores(path):
    with open(path, newline="") as fh:
        return [
            {
                "replicate": int(r["replicate"]),
                "N": int(r["N"]),
                "model": r["model"],
                "score": EvalScore(r["metric"], float(r["value"]), float(r["se"]) if r["se"] else None),
            }
            for r in csv.DictReader(fh)
        ]
