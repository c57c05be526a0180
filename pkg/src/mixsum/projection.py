"""Projection of every posterior draw onto a fixed-size Gaussian summary.

Each draw's mixture is sampled, a K*-component GMM is fitted to the sample,
components are put in location order, and the resulting set of summaries
gives pointwise credible ribbons and a posterior mean summary density.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError, TooManyFailuresError, ValidationError
from .kernels import RngStream
from .reference_models import Dataset, DrawBundle, per_draw_predictive
from .summary_fit import EmConfig, GmmSummary, fit_gmm, record_to_summary, summary_to_record

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.10
DEFAULT_H = 1000
GRID_POINTS = 512
GRID_PAD = 0.10


@dataclass
class PosteriorSummarySet:
    """Per-draw projected summaries, ordered by draw index.

    ``failed`` lists the draw indices whose projection failed and were
    skipped.
    """

    k_star: int
    summaries: list
    h_per_draw: int = DEFAULT_H
    draw_indices: list = field(default_factory=list)
    failed: list = field(default_factory=list)

    def __post_init__(self):
        if not self.draw_indices:
            self.draw_indices = list(range(len(self.summaries)))
        if len(self.draw_indices) != len(self.summaries):
            raise ValidationError("draw_indices and summaries differ in length")
        if any(s.k != self.k_star for s in self.summaries):
            raise ValidationError(f"every summary must have k={self.k_star}")

    @property
    def M(self):
        return len(self.summaries)

    @property
    def d(self):
        return self.summaries[0].d

    def is_aligned(self):
        return all(s.is_canonical() for s in self.summaries)

    def pdf_matrix(self, X):
        """Density of every summary at every point, shape (M, N)."""
        return np.vstack([s.pdf(X) for s in self.summaries])

    def mean_logpdf(self, X):
        """Log of the posterior mean summary density (average over members)."""
        return np.log(self.pdf_matrix(X).mean(axis=0))


def _project_one(draw, k_star, h, config, warm_start, rng):
    sample = per_draw_predictive(draw, h, rng.spawn(0))
    return fit_gmm(sample, k_star, config, rng.spawn(1), warm_start=warm_start)


def project_posterior(bundle: DrawBundle, k_star, h=DEFAULT_H, config=None, warm_start=None, rng=None, threads=1):
    """Project each draw of ``bundle`` onto a ``k_star``-component GMM.

    Parameters
    ----------
    bundle : DrawBundle
    k_star : int
    h : int
        Predictive samples per draw.
    config : EmConfig, optional
    warm_start : GmmSummary, optional
        Used as an extra EM start for every draw, in addition to the
        ``config.restarts`` fresh kmeans++ starts.
    rng : RngStream
        Draw ``m`` uses ``rng.spawn(m)``, so results do not depend on
        ``threads``.
    threads : int
        Worker threads.

    Returns
    -------
    PosteriorSummarySet

    Raises
    ------
    TooManyFailuresError
        When more than 10% of the draws fail.
    """
    config = config or EmConfig()
    rng = rng if rng is not None else RngStream(0)
    if k_star < 1 or h < k_star:
        raise ValidationError(f"need 1 <= k_star <= h, got k_star={k_star}, h={h}")
    if warm_start is not None:
        if warm_start.k != k_star:
            raise ValidationError(f"warm start has k={warm_start.k}, expected {k_star}")
        if warm_start.d != bundle.d:
            raise DimensionError("warm start dimension does not match the bundle")

    def job(m):
        try:
            return _project_one(bundle.draws[m], k_star, h, config, warm_start, rng.spawn(m))
        except NumericalError as exc:
            return exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(bundle.M)))
    else:
        results = [job(m) for m in range(bundle.M)]

    summaries, indices, failed = [], [], []
    for m, res in enumerate(results):
        if isinstance(res, Exception):
            failed.append(bundle.draws[m].draw_index)
            log.warning("draw %d failed: %s", bundle.draws[m].draw_index, res)
        else:
            summaries.append(res)
            indices.append(bundle.draws[m].draw_index)
    if len(failed) > MAX_FAILURE_FRACTION * bundle.M:
        raise TooManyFailuresError(
            f"{len(failed)} of {bundle.M} draws failed to project (limit {MAX_FAILURE_FRACTION:.0%})"
        )
    return PosteriorSummarySet(k_star, summaries, h, indices, failed)


def align_labels(pset: PosteriorSummarySet) -> PosteriorSummarySet:
    """Put every member's components in canonical location order (idempotent)."""
    return PosteriorSummarySet(
        pset.k_star, [s.canonicalize() for s in pset.summaries], pset.h_per_draw, list(pset.draw_indices), list(pset.failed)
    )


@dataclass
class DensityRibbon:
    """Pointwise 2.5% / 97.5% percentiles and mean of member densities on a grid."""

    grid: np.ndarray
    lower: np.ndarray
    mean: np.ndarray
    upper: np.ndarray

    def contains(self, values):
        """Boolean mask of grid points where ``values`` lie inside the ribbon."""
        return (values >= self.lower) & (values <= self.upper)

    @property
    def width(self):
        return self.upper - self.lower


def density_ribbon(pset: PosteriorSummarySet, grid) -> DensityRibbon:
    """Pointwise 95% ribbon and mean of the member densities.

    The bounds use linear-interpolation percentiles.  With few members the
    mean can fall outside the percentile band; the bounds are then widened
    to include it so that ``lower <= mean <= upper`` always holds.
    """
    if pset.M < 1:
        raise ValidationError("empty posterior summary set")
    G = grid.points if isinstance(grid, Dataset) else np.asarray(grid, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    if G.shape[0] == 0:
        raise ValidationError("empty grid")
    if G.shape[1] != pset.d:
        raise DimensionError(f"grid has dimension {G.shape[1]}, summaries have {pset.d}")
    dens = pset.pdf_matrix(G)
    mean = dens.mean(axis=0)
    lo, hi = np.percentile(dens, [2.5, 97.5], axis=0)
    return DensityRibbon(G, np.minimum(lo, mean), mean, np.maximum(hi, mean))


def default_grid(points, n=GRID_POINTS, pad=GRID_PAD):
    """Equispaced univariate grid spanning the data range widened by ``pad`` per side."""
    X = points.points if isinstance(points, Dataset) else np.asarray(points, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise DimensionError("default grids are univariate; pass a grid for d > 1")
        X = X[:, 0]
    lo, hi = float(X.min()), float(X.max())
    span = hi - lo if hi > lo else 1.0
    return np.linspace(lo - pad * span, hi + pad * span, n)[:, None]


def write_ribbon(ribbon, path, reference=None):
    """Ribbon CSV: grid coordinates, lower, mean, upper (and optionally a reference column)."""
    d = ribbon.grid.shape[1]
    cols = ["y"] if d == 1 else [f"y{j + 1}" for j in range(d)]
    cols += ["lower", "mean", "upper"]
    if reference is not None:
        cols.append("reference")
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(ribbon.grid.shape[0]):
            vals = list(ribbon.grid[i]) + [ribbon.lower[i], ribbon.mean[i], ribbon.upper[i]]
            if reference is not None:
                vals.append(reference[i])
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def read_ribbon(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    d = header.index("lower")
    return DensityRibbon(data[:, :d], data[:, d], data[:, d + 1], data[:, d + 2])


def write_summary_set(pset, path):
    """JSON-lines: a header with k_star, h and failed draws, then one summary per line."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"k_star": pset.k_star, "h": pset.h_per_draw, "M": pset.M, "failed": pset.failed}) + "\n")
        for m, s in zip(pset.draw_indices, pset.summaries):
            fh.write(json.dumps(summary_to_record(s, m)) + "\n")


def read_summary_set(path):
    from .errors import ParseError

    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad header: {exc}", path, 1) from None
    summaries, idx = [], []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", path, i) from None
        summaries.append(record_to_summary(rec, path, i))
        idx.append(int(rec["m"]))
    return PosteriorSummarySet(int(head["k_star"]), summaries, int(head["h"]), idx, list(head.get("failed", [])))
