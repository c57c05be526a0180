"""Cluster allocations and their posterior uncertainty under two losses.

``conditional`` allocates each observation to the summary component with
the highest responsibility; ``kmeans`` allocates it to the nearest centroid
fitted to posterior predictive samples.  Repeating either rule over the
per-draw summaries gives a label matrix whose vote shares measure
uncertainty.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFitError, DimensionError, TooManyFailuresError, ValidationError
from .kernels import RngStream, as_generator
from .reference_models import Dataset, DrawBundle, per_draw_predictive
from .summary_fit import kmeanspp_centers

LOSSES = ("conditional", "kmeans")
MAX_FAILURE_FRACTION = 0.10


def _points(data, d=None):
    X = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if d is not None and X.shape[1] != d:
        raise DimensionError(f"data have dimension {X.shape[1]}, expected {d}")
    return X


@dataclass
class AllocationReport:
    """Per-observation labels (1-based) and vote-share uncertainty.

    ``label_matrix`` has shape (N, M): column m holds the labels implied by
    draw m.  ``labels`` is the modal label per row and ``uncertainty`` is one
    minus the modal vote share.  ``point_estimate`` holds the labels from the
    single summary estimate when available.
    """

    loss: str
    k: int
    label_matrix: np.ndarray
    point_estimate: np.ndarray | None = None
    failed: list = field(default_factory=list)
    labels: np.ndarray = field(init=False)
    uncertainty: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValidationError(f"loss must be one of {LOSSES}")
        L = np.asarray(self.label_matrix, dtype=np.int64)
        if L.ndim != 2 or L.shape[1] < 1:
            raise ValidationError("label matrix must be (N, M) with M >= 1")
        self.label_matrix = L
        self.labels, share = modal_labels(L, self.k)
        self.uncertainty = 1.0 - share

    def vote_shares(self):
        """(N, k) matrix of per-label vote shares; rows sum to 1."""
        return vote_counts(self.label_matrix, self.k) / self.label_matrix.shape[1]


def vote_counts(L, k):
    counts = np.zeros((L.shape[0], k), dtype=np.int64)
    for c in range(1, k + 1):
        counts[:, c - 1] = (L == c).sum(axis=1)
    return counts


def modal_labels(L, k):
    """Modal label (ties to the smallest label) and its vote share."""
    counts = vote_counts(L, k)
    lab = np.argmax(counts, axis=1)
    return lab + 1, counts[np.arange(L.shape[0]), lab] / L.shape[1]


# ---------------------------------------------------------------------------
# Conditional-probability loss


def conditional_allocate(summary, data):
    """Label = argmax of responsibilities (ties to the smallest index), 1-based."""
    X = _points(data, summary.d)
    # argmax of the unnormalized log terms equals argmax of the responsibilities
    return np.argmax(summary.component_logpdf(X), axis=1) + 1


def conditional_posterior_allocate(pset, data, point_summary=None):
    """Per-draw responsibility allocations and their vote-share uncertainty.

    Parameters
    ----------
    pset : PosteriorSummarySet
        Must be aligned (see :func:`mixsum.projection.align_labels`).
    data : Dataset or array
    point_summary : GmmSummary, optional
        Summary estimate used for the ``point_estimate`` labels.
    """
    if not pset.is_aligned():
        raise ValidationError("posterior summary set is not aligned; apply align_labels first")
    X = _points(data, pset.d)
    L = np.column_stack([conditional_allocate(s, X) for s in pset.summaries])
    pe = conditional_allocate(point_summary, X) if point_summary is not None else None
    return AllocationReport("conditional", pset.k_star, L, pe)


# ---------------------------------------------------------------------------
# k-means loss


@dataclass(frozen=True, eq=False)
class CentroidSet:
    """Centroids sorted by first coordinate; ``wcss`` is the fitted objective."""

    centroids: np.ndarray
    wcss: float = float("nan")

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.centroids, dtype=float))
        order = canonical_centroid_order(C)
        C = C[order]
        C.setflags(write=False)
        object.__setattr__(self, "centroids", C)

    @property
    def k(self):
        return self.centroids.shape[0]

    @property
    def d(self):
        return self.centroids.shape[1]


def canonical_centroid_order(C):
    keys = [C[:, 1]] if C.shape[1] > 1 else []
    return np.lexsort(keys + [C[:, 0]])


@dataclass
class KmeansResult:
    centroids: CentroidSet
    trace: np.ndarray
    labels: np.ndarray


def _sq_dist(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def lloyd(X, centers, max_iters=300):
    """Lloyd iterations from ``centers``; returns (centers, labels, wcss trace).

    An empty cluster is reseeded at the point farthest from its nearest
    centroid.
    """
    C = np.array(centers, dtype=float)
    k = C.shape[0]
    trace = []
    prev_lab = None
    for _ in range(max_iters):
        D = _sq_dist(X, C)
        lab = np.argmin(D, axis=1)
        near = D[np.arange(X.shape[0]), lab]
        trace.append(float(near.sum()))
        if prev_lab is not None and np.array_equal(lab, prev_lab):
            break
        counts = np.bincount(lab, minlength=k)
        for q in np.flatnonzero(counts == 0):
            far = int(np.argmax(near))
            C[q] = X[far]
            lab[far] = q
            near[far] = 0.0
            counts = np.bincount(lab, minlength=k)
        for q in range(k):
            C[q] = X[lab == q].mean(axis=0)
        prev_lab = lab
    else:
        D = _sq_dist(X, C)
        lab = np.argmin(D, axis=1)
        trace.append(float(D[np.arange(X.shape[0]), lab].sum()))
    return C, lab, np.array(trace)


def kmeans_fit(samples, k_star, rng=None, restarts=5, max_iters=300, return_result=False):
    """k-means by Lloyd iterations from kmeans++ seeds, best of ``restarts``.

    Restart ``r`` uses ``rng.spawn(r)``.  Raises :class:`DegenerateFitError`
    when the sample has fewer than ``k_star`` distinct points.
    """
    rng = rng if rng is not None else RngStream(0)
    X = _points(samples)
    if k_star < 1 or restarts < 1:
        raise ValidationError("k_star and restarts must be >= 1")
    if np.unique(X, axis=0).shape[0] < k_star:
        raise DegenerateFitError(f"fewer than {k_star} distinct points")
    best = None
    for r in range(restarts):
        if k_star == 1:
            C0 = X.mean(axis=0, keepdims=True)
        else:
            C0 = X[kmeanspp_centers(X, k_star, as_generator(rng.spawn(r)))]
        C, lab, trace = lloyd(X, C0, max_iters)
        if best is None or trace[-1] < best[2][-1]:
            best = (C, lab, trace)
        if k_star == 1:
            break
    C, lab, trace = best
    if np.unique(C, axis=0).shape[0] < k_star:
        raise DegenerateFitError("coincident centroids")
    cs = CentroidSet(C, trace[-1])
    if return_result:
        return KmeansResult(cs, trace, kmeans_assign(cs, X))
    return cs


def kmeans_assign(centroids, data):
    """Nearest-centroid labels (1-based, ties to the smallest index)."""
    C = centroids.centroids if isinstance(centroids, CentroidSet) else np.atleast_2d(centroids)
    X = _points(data, C.shape[1])
    return np.argmin(_sq_dist(X, C), axis=1) + 1


def kmeans_posterior_allocate(bundle: DrawBundle, k_star, h, data, rng=None, restarts=5, point_centroids=None):
    """Per-draw k-means allocations and their vote-share uncertainty.

    Draw m: sample ``h`` points from its mixture (stream ``rng.spawn(m, 0)``),
    fit sorted centroids (stream ``rng.spawn(m, 1)``), assign ``data``.
    Draws whose fit is degenerate are skipped, up to 10% of the bundle.
    """
    rng = rng if rng is not None else RngStream(0)
    if h < k_star:
        raise ValidationError("h must be >= k_star")
    X = _points(data, bundle.d)
    cols, failed = [], []
    for m, draw in enumerate(bundle.draws):
        sub = rng.spawn(m)
        try:
            Y = per_draw_predictive(draw, h, sub.spawn(0))
            cs = kmeans_fit(Y, k_star, sub.spawn(1), restarts)
        except DegenerateFitError:
            failed.append(draw.draw_index)
            continue
        cols.append(kmeans_assign(cs, X))
    if len(failed) > MAX_FAILURE_FRACTION * bundle.M:
        raise TooManyFailuresError(f"{len(failed)} of {bundle.M} draws gave degenerate k-means fits")
    pe = kmeans_assign(point_centroids, X) if point_centroids is not None else None
    return AllocationReport("kmeans", k_star, np.column_stack(cols), pe, failed)


# ---------------------------------------------------------------------------
# Output


def write_allocation(report, data, path):
    """CSV: obs_index, coordinates, label_pointest, label_modal, uncertainty, loss_tag."""
    X = _points(data)
    d = X.shape[1]
    coords = ["y"] if d == 1 else [f"y{j + 1}" for j in range(d)]
    pe = report.point_estimate
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["obs_index", *coords, "label_pointest", "label_modal", "uncertainty", "loss_tag"])
        for i in range(X.shape[0]):
            w.writerow(
                [
                    i + 1,
                    *(repr(float(v)) for v in X[i]),
                    "" if pe is None else int(pe[i]),
                    int(report.labels[i]),
                    repr(float(report.uncertainty[i])),
                    report.loss,
                ]
            )


def read_allocation(path):
    """Parse an allocation CSV into a dict of columns."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        "label_modal": np.array([int(r["label_modal"]) for r in rows]),
        "label_pointest": np.array([int(r["label_pointest"]) if r["label_pointest"] else 0 for r in rows]),
        "uncertainty": np.array([float(r["uncertainty"]) for r in rows]),
        "loss_tag": [r["loss_tag"] for r in rows],
    }
