"""Log-density-ratio discrepancy between summaries and the posterior predictive.

For a predictive sample y_1..y_N the discrepancy of a summary g is
``d_n = log g(y_n) - log f_hat(y_n)`` where ``f_hat`` is the Monte Carlo
posterior predictive density (the average of the per-draw mixtures).  Its
mean estimates minus the KL divergence from the predictive to the summary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .reference_models import Dataset, DrawBundle

DEFAULT_DELTA = 0.1
DEFAULT_SD_FACTOR = 3.0


def _points(points):
    X = points.points if isinstance(points, Dataset) else np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


def posterior_predictive_logdensity(bundle: DrawBundle, points) -> np.ndarray:
    """log f_hat(y) per point, via log-mean-exp over the bundle's draws."""
    if bundle.M < 1:
        raise ValidationError("bundle is empty")
    X = _points(points)
    if X.shape[1] != bundle.d:
        raise DimensionError(f"points have dimension {X.shape[1]}, bundle has {bundle.d}")
    return bundle.log_mean_density(X)


@dataclass
class DiscrepancyTable:
    """Per-k discrepancy samples and their summaries.

    Attributes
    ----------
    k_values : ndarray of int
    samples : ndarray, shape (len(k_values), N)
        ``samples[i, n]`` is d_n for ``k_values[i]``.
    k_star : int or None
        Filled in by :func:`select_k_star`.
    by_rule : bool
        False when no k met the rule and the argmax fallback was used, or
        when ``k_star`` was forced.
    """

    k_values: np.ndarray
    samples: np.ndarray
    k_star: int | None = None
    delta: float = DEFAULT_DELTA
    sd_cap: float | None = None
    by_rule: bool = True
    forced: bool = False

    @property
    def n(self):
        return self.samples.shape[1]

    @property
    def mean(self):
        return self.samples.mean(axis=1)

    @property
    def sd(self):
        if self.n < 2:
            return np.zeros(len(self.k_values))
        return self.samples.std(axis=1, ddof=1)

    @property
    def se(self):
        return self.sd / math.sqrt(self.n)

    def mc_bound_violations(self, z=3.0):
        """k values whose mean discrepancy exceeds ``z`` Monte Carlo standard errors.

        The expected discrepancy is minus a KL divergence, so a clearly
        positive mean signals in-sample optimism of a summary fitted to
        the same predictive sample (typically at large k).
        """
        return self.k_values[self.mean > z * self.se]

    def row(self, k):
        idx = int(np.flatnonzero(self.k_values == k)[0])
        return self.mean[idx], self.sd[idx]


def discrepancy_samples(bundle, summaries, predictive, ref_logdensity=None):
    """Discrepancy samples for each summary on the shared predictive sample.

    Parameters
    ----------
    bundle : DrawBundle
    summaries : list
        Objects with ``logpdf`` (GmmSummary or MixtureDraw); the k of each
        is taken from ``.k``.
    predictive : Dataset or array
        Must be the sample the summaries were fitted to.
    ref_logdensity : ndarray, optional
        Precomputed :func:`posterior_predictive_logdensity` values.
    """
    if not summaries:
        raise ValidationError("no summaries given")
    X = _points(predictive)
    logf = posterior_predictive_logdensity(bundle, X) if ref_logdensity is None else ref_logdensity
    rows = []
    for s in summaries:
        if getattr(s, "d", getattr(s, "dim", X.shape[1])) != X.shape[1]:
            raise DimensionError("summary dimension does not match the predictive sample")
        rows.append(s.logpdf(X) - logf)
    ks = np.array([s.k for s in summaries], dtype=int)
    return DiscrepancyTable(ks, np.vstack(rows))


def select_k_star(table: DiscrepancyTable, delta=DEFAULT_DELTA, sd_cap=None, forced=None):
    """Smallest k with mean >= -delta and sd <= sd_cap.

    ``sd_cap`` defaults to three times the smallest sd over k.  When no k
    qualifies, the k with the largest mean is returned and
    ``table.by_rule`` is set to False.  ``forced`` overrides the rule.
    The table is updated in place and ``k_star`` is returned.
    """
    if not delta > 0:
        raise ValidationError("delta must be > 0")
    mean, sd = table.mean, table.sd
    if sd_cap is None:
        sd_cap = DEFAULT_SD_FACTOR * float(sd.min())
    table.delta, table.sd_cap = float(delta), float(sd_cap)
    if forced is not None:
        if forced not in set(table.k_values.tolist()):
            raise ValidationError(f"forced K*={forced} is not among the fitted k values")
        table.k_star, table.by_rule, table.forced = int(forced), False, True
        return table.k_star
    ok = np.flatnonzero((mean >= -delta) & (sd <= sd_cap))
    if ok.size:
        idx = ok[np.argmin(table.k_values[ok])]
        table.by_rule = True
    else:
        idx = int(np.argmax(mean))
        table.by_rule = False
    table.forced = False
    table.k_star = int(table.k_values[idx])
    return table.k_star


def write_elbow_raw(table, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "n", "d_n"])
        for i, k in enumerate(table.k_values):
            for n, v in enumerate(table.samples[i]):
                w.writerow([int(k), n + 1, repr(float(v))])


def write_elbow(table, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "mean_d", "sd_d", "selected_flag"])
        for k, m, s in zip(table.k_values, table.mean, table.sd):
            w.writerow([int(k), repr(float(m)), repr(float(s)), int(k == table.k_star)])


def read_elbow_raw(path):
    """Rebuild a :class:`DiscrepancyTable` from a raw elbow CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ks = np.unique(data[:, 0].astype(int))
    rows = [data[data[:, 0] == k][:, 2] for k in ks]
    if len({r.shape[0] for r in rows}) != 1:
        raise ValidationError(f"{path}: unequal sample counts across k")
    return DiscrepancyTable(ks, np.vstack(rows))
