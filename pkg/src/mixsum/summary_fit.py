"""Gaussian-mixture summaries fitted by EM to posterior predictive samples.

Maximizing the mixture log-likelihood of a predictive sample is the Monte
Carlo version of minimizing the expected negative log-likelihood loss, so a
summary of dimension k is simply the best EM fit with k full-covariance
components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _em
from .errors import CovarianceError, DegenerateFitError, DimensionError, ValidationError
from .kernels import RngStream, as_generator, batched_cholesky, gaussian_logpdf
from .reference_models import Dataset, MixtureDraw, _as_points, draw_to_record, record_to_draw

SIMPLEX_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GmmSummary:
    """k-component Gaussian mixture with full covariances.

    ``loglik`` is the achieved log-likelihood of the sample the summary was
    fitted to (``nan`` when unknown).
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    loglik: float = float("nan")
    family: str = field(default="gaussian")

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        cov = np.asarray(self.covariances, dtype=float)
        k, d = mu.shape
        if cov.ndim == 1 and d == 1:
            cov = cov[:, None, None]
        if w.shape != (k,) or cov.shape != (k, d, d):
            raise DimensionError(f"inconsistent shapes: weights {w.shape}, means {mu.shape}, cov {cov.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise ValidationError(f"weights must lie on the simplex (sum {w.sum():.12g})")
        if self.family != "gaussian":
            raise ValidationError(f"summary kernel family {self.family!r} is not implemented")
        for arr in (w, mu, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def k(self):
        return self.weights.shape[0]

    @property
    def d(self):
        return self.means.shape[1]

    def component_logpdf(self, X):
        """log(eta_q) + log g_q(x), shape (N, k)."""
        X = _as_points(X, self.d)
        with np.errstate(divide="ignore"):
            lw = np.log(self.weights)
        return gaussian_logpdf(X, self.means, self.covariances) + lw[None, :]

    def logpdf(self, X):
        return logsumexp(self.component_logpdf(X), axis=1)

    def pdf(self, X):
        return np.exp(self.logpdf(X))

    def responsibilities(self, X):
        lp = self.component_logpdf(X)
        return np.exp(lp - logsumexp(lp, axis=1, keepdims=True))

    def permuted(self, order):
        order = np.asarray(order)
        return GmmSummary(self.weights[order], self.means[order], self.covariances[order], self.loglik)

    def canonical_order(self):
        """Ascending first mean coordinate; ties by second coordinate, then weight descending."""
        keys = [-self.weights]
        if self.d > 1:
            keys.append(self.means[:, 1])
        keys.append(self.means[:, 0])
        return np.lexsort(keys)

    def canonicalize(self):
        return self.permuted(self.canonical_order())

    def is_canonical(self):
        return bool(np.array_equal(self.canonical_order(), np.arange(self.k)))

    def to_draw(self, draw_index=0):
        """The summary as a :class:`MixtureDraw` (uni- or multivariate Gaussian)."""
        if self.d == 1:
            return MixtureDraw.from_params(
                "gaussian_uni",
                self.weights,
                {"mean": self.means[:, 0], "var": self.covariances[:, 0, 0]},
                draw_index,
            )
        return MixtureDraw.from_params(
            "gaussian_multi", self.weights, {"mean": self.means, "cov": self.covariances}, draw_index
        )

    def __eq__(self, other):
        if not isinstance(other, GmmSummary):
            return NotImplemented
        same_ll = self.loglik == other.loglik or (math.isnan(self.loglik) and math.isnan(other.loglik))
        return (
            same_ll
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.covariances, other.covariances)
        )


def summary_to_record(summary, index=0):
    """Bundle-line JSON shape plus ``k`` and ``loglik``."""
    rec = draw_to_record(summary.to_draw(index))
    rec["k"] = summary.k
    rec["loglik"] = None if math.isnan(summary.loglik) else float(summary.loglik)
    return rec


def record_to_summary(rec, path=None, line=None):
    dr = record_to_draw(rec, path, line)
    if dr.family == "gaussian_uni":
        means = dr.params["mean"][:, None]
        covs = dr.params["var"][:, None, None]
    elif dr.family == "gaussian_multi":
        means, covs = dr.params["mean"], dr.params["cov"]
    else:
        raise ValidationError("summaries must have Gaussian kernels")
    ll = rec.get("loglik")
    return GmmSummary(dr.weights, means, covs, float("nan") if ll is None else float(ll))


@dataclass
class EmConfig:
    """EM numerics.

    ``restarts`` counts kmeans++-seeded runs; ``ridge`` is the relative
    eigenvalue floor (times the average data variance) applied to
    covariance updates that would otherwise become singular.
    """

    max_iters: int = 500
    rel_tol: float = 1e-6
    restarts: int = 5
    ridge: float = 1e-6
    init: str = "kmeans++"

    def validate(self):
        if self.max_iters < 1 or self.restarts < 0:
            raise ValidationError("max_iters must be >= 1 and restarts >= 0")
        if not (self.rel_tol > 0 and self.ridge > 0):
            raise ValidationError("rel_tol and ridge must be > 0")
        if self.init != "kmeans++":
            raise ValidationError(f"unknown init method {self.init!r}")
        return self


@dataclass
class EmResult:
    summary: GmmSummary
    trace: np.ndarray
    converged: bool
    reinits: int


# ---------------------------------------------------------------------------
# EM core


def _m_step(X, resp, floor):
    nk = resp.sum(axis=0)
    weights = nk / nk.sum()
    # an empty component gives NaN moments here; em_run reinitializes it
    with np.errstate(divide="ignore", invalid="ignore"):
        means = (resp.T @ X) / nk[:, None]
    d = X.shape[1]
    covs = np.empty((resp.shape[1], d, d))
    for q in range(resp.shape[1]):
        diff = X - means[q]
        with np.errstate(divide="ignore", invalid="ignore"):
            covs[q] = (resp[:, q, None] * diff).T @ diff / nk[q]
        covs[q] = 0.5 * (covs[q] + covs[q].T)
        if not np.all(np.isfinite(covs[q])):
            continue
        lam = np.linalg.eigvalsh(covs[q])[0] if d > 1 else covs[q, 0, 0]
        if lam < floor:
            covs[q] += (floor - lam) * np.eye(d)
    return weights, means, covs


def _e_step(X, weights, means, covs):
    with np.errstate(divide="ignore"):
        lw = np.log(weights)
    lp = gaussian_logpdf(X, means, covs, batched_cholesky(covs)) + lw[None, :]
    norm = logsumexp(lp, axis=1)
    return np.exp(lp - norm[:, None]), float(norm.sum()), norm


def kmeanspp_centers(X, k, gen):
    """k-means++ seeding; returns indices of the chosen rows of ``X``."""
    n = X.shape[0]
    idx = [int(gen.integers(n))]
    d2 = ((X - X[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            raise DegenerateFitError(f"fewer than {k} distinct points")
        nxt = int(np.searchsorted(np.cumsum(d2), gen.random() * total, side="right"))
        nxt = min(nxt, n - 1)
        idx.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return np.array(idx)


def _kmeanspp_resp(X, k, gen):
    centers = X[kmeanspp_centers(X, k, gen)]
    dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    lab = np.argmin(dist, axis=1)
    resp = np.zeros((X.shape[0], k))
    resp[np.arange(X.shape[0]), lab] = 1.0
    return resp


def em_run(X, k, config, init_resp=None, init_params=None, floor=None, compiled=True):
    """A single EM run from given responsibilities or parameters.

    Returns an :class:`EmResult` with the per-iteration log-likelihood trace.
    The returned summary's ``loglik`` is the log-likelihood at the returned
    parameters.  Univariate data go through a compiled loop unless
    ``compiled`` is False; both paths perform the same arithmetic steps.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if floor is None:
        floor = _variance_floor(X, config.ridge)
    if init_params is not None:
        weights, means, covs = (np.array(a, dtype=float) for a in init_params)
    else:
        weights, means, covs = _m_step(X, init_resp, floor)
    min_weight = 1e-8 * k
    if d == 1 and compiled:
        return _em_run_uni(X, weights, means, covs, config, floor, min_weight)
    trace = []
    reinits = 0
    converged = False
    prev = -np.inf
    for _ in range(config.max_iters):
        try:
            resp, ll, point_ll = _e_step(X, weights, means, covs)
        except CovarianceError as exc:
            raise DegenerateFitError(str(exc)) from None
        trace.append(ll)
        if not np.isfinite(ll):
            raise DegenerateFitError("log-likelihood is not finite")
        if abs(ll - prev) <= config.rel_tol * abs(ll):
            converged = True
            break
        prev = ll
        weights, means, covs = _m_step(X, resp, floor)
        dead = np.flatnonzero(weights < min_weight)
        if dead.size:
            reinits += dead.size
            worst = np.argsort(point_ll)
            data_cov = np.atleast_2d(np.cov(X, rowvar=False, bias=True))
            for j, q in enumerate(dead):
                means[q] = X[worst[j % n]]
                covs[q] = data_cov + floor * np.eye(d)
                weights[q] = 1.0 / n
            weights /= weights.sum()
            prev = -np.inf
    else:
        resp, ll, _ = _e_step(X, weights, means, covs)
        trace.append(ll)
    summary = GmmSummary(weights / weights.sum(), means, covs, ll)
    return EmResult(summary, np.array(trace), converged, reinits)


def _em_run_uni(X, weights, means, covs, config, floor, min_weight):
    x = np.ascontiguousarray(X[:, 0])
    w = np.ascontiguousarray(weights, dtype=float).copy()
    mu = np.ascontiguousarray(means[:, 0], dtype=float).copy()
    var = np.ascontiguousarray(covs[:, 0, 0], dtype=float).copy()
    data_var = float(x.var()) if x.shape[0] > 1 else 0.0
    trace, nt, status, reinits = _em.em_uni(
        x, w, mu, var, config.max_iters, config.rel_tol, floor, min_weight, data_var
    )
    if status < 0:
        raise DegenerateFitError("log-likelihood is not finite")
    summary = GmmSummary(w / w.sum(), mu[:, None], var[:, None, None], float(trace[nt - 1]))
    return EmResult(summary, trace[:nt].copy(), status == 1, int(reinits))


def _variance_floor(X, ridge):
    if X.shape[0] < 2:
        return 0.0
    total = np.trace(np.atleast_2d(np.cov(X, rowvar=False, bias=True))) / X.shape[1]
    return ridge * total


def _samples_array(samples):
    X = samples.points if isinstance(samples, Dataset) else np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


def fit_gmm(samples, k, config=None, rng=None, warm_start=None):
    """Best-of-restarts EM fit of a k-component full-covariance GMM.

    Parameters
    ----------
    samples : Dataset or array (N, d)
    k : int
    config : EmConfig, optional
    rng : RngStream
        Restart ``r`` uses the sub-stream ``rng.spawn(k, r)``.
    warm_start : GmmSummary, optional
        Extra starting point tried in addition to the kmeans++ restarts.

    Returns
    -------
    GmmSummary
        Canonically ordered; ``loglik`` is the achieved log-likelihood.
    """
    config = (config or EmConfig()).validate()
    rng = rng if rng is not None else RngStream(0)
    X = _samples_array(samples)
    n, d = X.shape
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of samples {n}")
    if warm_start is not None and (warm_start.k != k or warm_start.d != d):
        raise ValidationError("warm start does not match k or dimension")
    n_distinct = np.unique(X, axis=0).shape[0]
    if n_distinct < k or (n_distinct == 1):
        raise DegenerateFitError(f"{n_distinct} distinct sample(s) cannot support {k} component(s)")
    floor = _variance_floor(X, config.ridge)

    if k == 1:
        mean = X.mean(axis=0)
        diff = X - mean
        cov = diff.T @ diff / n
        res = em_run(X, 1, EmConfig(max_iters=1, rel_tol=config.rel_tol, ridge=config.ridge), init_params=(np.ones(1), mean[None], cov[None]), floor=floor)
        return res.summary

    best = None
    attempts = []
    if warm_start is not None:
        attempts.append(("warm", None))
    attempts.extend(("kmeans++", r) for r in range(config.restarts))
    if not attempts:
        raise ValidationError("no EM starts: restarts=0 and no warm start")
    errors = []
    for kind, r in attempts:
        try:
            if kind == "warm":
                res = em_run(
                    X, k, config, init_params=(warm_start.weights, warm_start.means, warm_start.covariances), floor=floor
                )
            else:
                gen = as_generator(rng.spawn(k, r))
                res = em_run(X, k, config, init_resp=_kmeanspp_resp(X, k, gen), floor=floor)
        except DegenerateFitError as exc:
            errors.append(str(exc))
            continue
        # a component carried by fewer than d + 1 points is a spurious
        # singular optimum; such starts rank below every regular one
        rank = (not _collapsed(res.summary, n), res.summary.loglik)
        if best is None or rank > best[0]:
            best = (rank, res.summary)
    if best is None:
        raise DegenerateFitError(f"all EM starts failed for k={k}: {errors[0]}")
    return best[1].canonicalize()


def _collapsed(summary, n):
    return bool(np.any(summary.weights * n < summary.d + 1))


class SequenceFitError(DegenerateFitError):
    def __init__(self, k, cause):
        self.k = k
        super().__init__(f"k={k}: {cause}")


def fit_summary_sequence(samples, k_max, config=None, rng=None):
    """Independent fits for k = 1..k_max; element ``k-1`` has ``k`` components."""
    X = _samples_array(samples)
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    if k_max >= X.shape[0]:
        raise ValidationError(f"k_max={k_max} must be below the sample size {X.shape[0]}")
    out = []
    for k in range(1, k_max + 1):
        try:
            out.append(fit_gmm(X, k, config, rng))
        except (DegenerateFitError, ValidationError) as exc:
            raise SequenceFitError(k, exc) from exc
    return out
