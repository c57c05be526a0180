"""Posterior draws of reference models.

This module holds the data containers shared by the rest of the package
(:class:`Dataset`, :class:`MixtureDraw`, :class:`DrawBundle`), the two
simulation designs, the conjugate Dirichlet-process-mixture Gibbs samplers,
posterior predictive sampling and the draw-bundle JSON-lines format.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import logsumexp
from scipy.stats import invwishart

from . import _gibbs
from .errors import DimensionError, ParseError, ValidationError
from .kernels import (
    FAMILIES,
    RngStream,
    as_generator,
    component_logpdf,
    sample_components,
    stack_params,
    unstack_params,
)

log = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-8


# ---------------------------------------------------------------------------
# Containers


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observations as an (N, d) array, optionally with integer class labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise DimensionError("points must be (N, d)")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (pts.shape[0],):
                raise ValidationError(f"{lab.shape[0]} labels for {pts.shape[0]} points")
            object.__setattr__(self, "labels", lab)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None and other.labels is not None and np.array_equal(self.labels, other.labels)
        )
        return np.array_equal(self.points, other.points) and same_labels


@dataclass(frozen=True, eq=False)
class MixtureDraw:
    """One posterior draw written as a finite mixture of kernels."""

    weights: np.ndarray
    kernels: tuple
    draw_index: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        kernels = tuple(self.kernels)
        if w.ndim != 1 or w.shape[0] == 0:
            raise ValidationError("weights must be a non-empty vector")
        if len(kernels) != w.shape[0]:
            raise ValidationError(f"{len(kernels)} kernels for {w.shape[0]} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be non-negative and finite")
        if abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise ValidationError(f"weights sum to {w.sum():.10g}, not 1")
        fams = {k.family for k in kernels}
        if len(fams) != 1:
            raise ValidationError(f"mixed kernel families {sorted(fams)}")
        if len({k.dim for k in kernels}) != 1:
            raise DimensionError("kernels of different dimensions")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "kernels", kernels)

    @property
    def family(self):
        return self.kernels[0].family

    @property
    def dim(self):
        return self.kernels[0].dim

    @property
    def k(self):
        return len(self.kernels)

    @cached_property
    def params(self):
        return stack_params(self.kernels)

    @classmethod
    def from_params(cls, family, weights, params, draw_index=0):
        return cls(weights, unstack_params(family, params), draw_index)

    def component_logpdf(self, X):
        return component_logpdf(self.family, self.params, _as_points(X, self.dim))

    def logpdf(self, X):
        """Mixture log-density at each row of ``X``."""
        with np.errstate(divide="ignore"):
            lw = np.log(self.weights)
        return logsumexp(self.component_logpdf(X) + lw[None, :], axis=1)

    def pdf(self, X):
        return np.exp(self.logpdf(X))

    def sample(self, n, rng):
        """``n`` i.i.d. points from the mixture, shape (n, d)."""
        gen = as_generator(rng)
        counts = gen.multinomial(n, self.weights / self.weights.sum())
        pts = sample_components(self.family, self.params, counts, gen)
        return pts[gen.permutation(n)]

    def __eq__(self, other):
        if not isinstance(other, MixtureDraw):
            return NotImplemented
        return (
            self.draw_index == other.draw_index
            and np.array_equal(self.weights, other.weights)
            and self.kernels == other.kernels
        )


@dataclass(frozen=True, eq=False)
class DrawBundle:
    """Posterior sample of a reference model: M mixture draws plus metadata."""

    draws: tuple
    model: str = "unknown"
    seed: int = 0
    d: int = field(default=None)

    def __post_init__(self):
        draws = tuple(self.draws)
        if not draws:
            raise ValidationError("a bundle needs at least one draw")
        fams = {dr.family for dr in draws}
        dims = {dr.dim for dr in draws}
        if len(fams) != 1:
            raise ValidationError(f"bundle mixes kernel families {sorted(fams)}")
        if len(dims) != 1:
            raise DimensionError("bundle mixes dimensions")
        d = dims.pop()
        if self.d is not None and self.d != d:
            raise DimensionError(f"metadata says d={self.d} but draws have d={d}")
        object.__setattr__(self, "draws", draws)
        object.__setattr__(self, "d", d)

    @property
    def M(self):
        return len(self.draws)

    @property
    def family(self):
        return self.draws[0].family

    def __len__(self):
        return self.M

    def __eq__(self, other):
        if not isinstance(other, DrawBundle):
            return NotImplemented
        return (self.model, self.seed, self.d, self.draws) == (other.model, other.seed, other.d, other.draws)

    def log_mean_density(self, X):
        """Log of the posterior mean density ``(1/M) sum_m f(x | theta_m)``."""
        X = _as_points(X, self.d)
        per_draw = np.empty((X.shape[0], self.M))
        for j, dr in enumerate(self.draws):
            per_draw[:, j] = dr.logpdf(X)
        return logsumexp(per_draw, axis=1) - math.log(self.M)


def _as_points(X, d):
    X = np.asarray(X.points if isinstance(X, Dataset) else X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if d == 1 else X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise DimensionError(f"points of shape {X.shape} do not match dimension {d}")
    return X


# ---------------------------------------------------------------------------
# Simulation designs

SIM_UNIVARIATE = {
    "means": np.array([19.0, 19.0, 23.0, 20.0, 33.0]),
    "variances": np.array([5.0, 1.0, 1.0, 0.7, 2.0]),
    # the published weights sum to 1.1; they are used after normalization
    "weights": np.array([0.2, 0.2, 0.25, 0.2, 0.25]) / 1.1,
}


def _rotation(rho):
    return np.array([[math.cos(rho), -math.sin(rho)], [math.sin(rho), math.cos(rho)]])


def _bivariate_design():
    R = _rotation(math.pi / 4)
    return {
        "means": np.array([[4.0, 4.0], [7.0, 4.0], [6.0, 2.0]]),
        "covariances": np.array(
            [np.eye(2), R @ np.diag([2.5, 0.2]) @ R.T, np.diag([3.0, 0.1])]
        ),
        "weights": np.array([0.45, 0.3, 0.25]),
    }


SIM_BIVARIATE = _bivariate_design()


def sim_univariate_truth():
    """The five-component univariate generating density as a draw."""
    p = SIM_UNIVARIATE
    return MixtureDraw.from_params("gaussian_uni", p["weights"], {"mean": p["means"], "var": p["variances"]})


def sim_bivariate_truth():
    """The three-component bivariate generating density as a draw."""
    p = SIM_BIVARIATE
    return MixtureDraw.from_params("gaussian_multi", p["weights"], {"mean": p["means"], "cov": p["covariances"]})


def _generate(truth, n, rng):
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    gen = as_generator(rng)
    labels = gen.choice(truth.k, size=n, p=truth.weights)
    pts = np.empty((n, truth.dim))
    counts = np.bincount(labels, minlength=truth.k)
    order = np.argsort(labels, kind="stable")
    pts[order] = sample_components(truth.family, truth.params, counts, gen)
    return Dataset(pts, labels + 1)


def generate_sim_univariate(n, rng):
    """``n`` draws from the five-component univariate design, labels 1..5."""
    return _generate(sim_univariate_truth(), n, rng)


def generate_sim_bivariate(n, rng):
    """``n`` draws from the three-component bivariate design, labels 1..3."""
    return _generate(sim_bivariate_truth(), n, rng)


GENERATORS = {
    "sim_univariate": generate_sim_univariate,
    "sim_bivariate": generate_sim_bivariate,
}


# ---------------------------------------------------------------------------
# Dirichlet process mixture, collapsed Gibbs


@dataclass
class DpmConfig:
    """Hyperparameters and chain settings for the univariate DPM.

    ``mu0=None`` means the data median.  The concentration has a
    Gamma(shape, rate) prior.  ``max_clusters`` caps the number of occupied
    clusters (``None`` for no cap); a cap of 1 turns the sampler into a
    conjugate single-Gaussian sampler.
    """

    mu0: float | None = None
    k0: float = 0.2
    alpha0: float = 2.0
    beta0: float = 1.0
    conc_shape: float = 2.0
    conc_rate: float = 4.0
    iterations: int = 6000
    burn_in: int = 1000
    thinning: int = 10
    alpha_init: float = 1.0
    update_alpha: bool = True
    max_clusters: int | None = None

    def validate(self):
        for name in ("k0", "alpha0", "beta0", "conc_shape", "conc_rate", "alpha_init"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name}: must be > 0")
        for name in ("iterations", "thinning"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name}: must be >= 1")
        if self.burn_in < 0:
            raise ValidationError("burn_in: must be >= 0")
        if self.iterations <= self.burn_in:
            raise ValidationError("iterations: must exceed burn_in")
        if self.max_clusters is not None and self.max_clusters < 1:
            raise ValidationError("max_clusters: must be >= 1")
        return self

    @property
    def n_draws(self):
        return (self.iterations - self.burn_in) // self.thinning


@dataclass
class MvDpmConfig:
    """Normal-inverse-Wishart DPM settings for multivariate data.

    ``mean0=None`` means the sample mean; ``scale0=None`` means the sample
    covariance.
    """

    mean0: np.ndarray | None = None
    kappa0: float = 1.0
    nu0: float = 2.0
    scale0: np.ndarray | None = None
    conc_shape: float = 2.0
    conc_rate: float = 4.0
    iterations: int = 2000
    burn_in: int = 1000
    thinning: int = 1
    alpha_init: float = 1.0
    update_alpha: bool = True
    max_clusters: int | None = None

    def validate(self, d=None):
        if not (self.kappa0 > 0 and self.conc_shape > 0 and self.conc_rate > 0 and self.alpha_init > 0):
            raise ValidationError("kappa0, conc_shape, conc_rate, alpha_init: must be > 0")
        if d is not None and not self.nu0 > d - 1:
            raise ValidationError(f"nu0: must exceed d - 1 = {d - 1}")
        if self.iterations <= self.burn_in or self.burn_in < 0 or self.thinning < 1:
            raise ValidationError("iterations/burn_in/thinning inconsistent")
        return self

    @property
    def n_draws(self):
        return (self.iterations - self.burn_in) // self.thinning


@dataclass
class ChainTrace:
    """Per-sweep diagnostics of a Gibbs run."""

    n_clusters: np.ndarray
    alpha: np.ndarray


def _update_concentration(alpha, n_clusters, n, shape, rate, gen):
    # Escobar & West auxiliary-variable update
    eta = gen.beta(alpha + 1.0, n)
    b = rate - math.log(eta)
    odds = (shape + n_clusters - 1.0) / (n * b)
    if gen.random() < odds / (1.0 + odds):
        return gen.gamma(shape + n_clusters, 1.0 / b)
    return gen.gamma(shape + n_clusters - 1.0, 1.0 / b)


def dpm_gibbs(data, config=None, rng=None, return_trace=False):
    """Collapsed Gibbs sampler for a univariate Normal-Gamma DPM.

    Each retained sweep is converted into a :class:`MixtureDraw` over the
    occupied clusters, weights ``n_q / N``, with cluster means and variances
    drawn from their conjugate posteriors.

    Parameters
    ----------
    data : Dataset
        Univariate observations.
    config : DpmConfig, optional
    rng : RngStream
    return_trace : bool
        Also return a :class:`ChainTrace` covering every sweep.

    Returns
    -------
    DrawBundle, or (DrawBundle, ChainTrace)
    """
    config = (config or DpmConfig()).validate()
    rng = rng if rng is not None else RngStream(0)
    if data.d != 1:
        raise DimensionError(f"dpm_gibbs supports univariate data only, got d={data.d}")
    if config.n_draws < 1:
        raise ValidationError("configuration retains no draws")
    gen = as_generator(rng)
    y = np.ascontiguousarray(data.points[:, 0])
    N = y.shape[0]
    mu0 = float(np.median(y)) if config.mu0 is None else float(config.mu0)
    k0, a0, b0 = float(config.k0), float(config.alpha0), float(config.beta0)
    cap_k = N if config.max_clusters is None else min(N, config.max_clusters)

    z = np.zeros(N, dtype=np.int64)
    counts = np.zeros(N)
    sums = np.zeros(N)
    sumsq = np.zeros(N)
    counts[0], sums[0], sumsq[0] = N, y.sum(), (y * y).sum()
    K = 1
    alpha = float(config.alpha_init)

    draws = []
    trace_k = np.empty(config.iterations, dtype=np.int64)
    trace_a = np.empty(config.iterations)
    for it in range(config.iterations):
        u = gen.random(N)
        K = _gibbs.uni_sweep(y, z, counts, sums, sumsq, K, u, alpha, mu0, k0, a0, b0, cap_k)
        if config.update_alpha:
            alpha = _update_concentration(alpha, K, N, config.conc_shape, config.conc_rate, gen)
        trace_k[it] = K
        trace_a[it] = alpha
        if it >= config.burn_in and (it - config.burn_in + 1) % config.thinning == 0:
            n = counts[:K]
            s = sums[:K]
            ss = sumsq[:K]
            kn = k0 + n
            mun = (k0 * mu0 + s) / kn
            an = a0 + 0.5 * n
            bn = np.maximum(b0 + 0.5 * (ss + k0 * mu0 * mu0 - kn * mun * mun), 1e-300)
            prec = gen.gamma(an, 1.0 / bn)
            mu = mun + gen.standard_normal(K) / np.sqrt(kn * prec)
            draws.append(
                MixtureDraw.from_params(
                    "gaussian_uni", n / N, {"mean": mu, "var": 1.0 / prec}, draw_index=len(draws)
                )
            )
    bundle = DrawBundle(draws, model="dpm", seed=rng.seed if isinstance(rng, RngStream) else 0)
    if return_trace:
        return bundle, ChainTrace(trace_k, trace_a)
    return bundle


def dpm_gibbs_mv(data, config=None, rng=None, return_trace=False):
    """Collapsed Gibbs sampler for a multivariate Normal-inverse-Wishart DPM.

    Same conventions as :func:`dpm_gibbs`; accepts any dimension d >= 1.
    """
    config = config or MvDpmConfig()
    rng = rng if rng is not None else RngStream(0)
    Y = np.ascontiguousarray(data.points)
    N, d = Y.shape
    config.validate(d)
    gen = as_generator(rng)
    m0 = Y.mean(axis=0) if config.mean0 is None else np.asarray(config.mean0, dtype=float)
    psi0 = np.atleast_2d(np.cov(Y, rowvar=False)) if config.scale0 is None else np.asarray(config.scale0, dtype=float)
    kappa0, nu0 = float(config.kappa0), float(config.nu0)
    cap_k = N if config.max_clusters is None else min(N, config.max_clusters)

    z = np.zeros(N, dtype=np.int64)
    counts = np.zeros(N)
    sums = np.zeros((N, d))
    outer = np.zeros((N, d, d))
    counts[0], sums[0], outer[0] = N, Y.sum(axis=0), Y.T @ Y
    K = 1
    alpha = float(config.alpha_init)

    draws = []
    trace_k = np.empty(config.iterations, dtype=np.int64)
    trace_a = np.empty(config.iterations)
    for it in range(config.iterations):
        u = gen.random(N)
        K = _gibbs.mv_sweep(Y, z, counts, sums, outer, K, u, alpha, m0, kappa0, nu0, psi0, cap_k)
        if config.update_alpha:
            alpha = _update_concentration(alpha, K, N, config.conc_shape, config.conc_rate, gen)
        trace_k[it] = K
        trace_a[it] = alpha
        if it >= config.burn_in and (it - config.burn_in + 1) % config.thinning == 0:
            means = np.empty((K, d))
            covs = np.empty((K, d, d))
            for q in range(K):
                n = counts[q]
                kn = kappa0 + n
                mn = (kappa0 * m0 + sums[q]) / kn
                psin = psi0 + outer[q] + kappa0 * np.outer(m0, m0) - kn * np.outer(mn, mn)
                psin = 0.5 * (psin + psin.T)
                cov = np.atleast_2d(invwishart.rvs(df=nu0 + n, scale=psin, random_state=gen))
                covs[q] = 0.5 * (cov + cov.T)
                means[q] = gen.multivariate_normal(mn, covs[q] / kn)
            draws.append(
                MixtureDraw.from_params(
                    "gaussian_multi", counts[:K] / N, {"mean": means, "cov": covs}, draw_index=len(draws)
                )
            )
    bundle = DrawBundle(draws, model="dpm_mv", seed=rng.seed if isinstance(rng, RngStream) else 0)
    if return_trace:
        return bundle, ChainTrace(trace_k, trace_a)
    return bundle


# ---------------------------------------------------------------------------
# Predictive sampling


def predictive_sample(bundle, n_total, rng):
    """Sample the posterior predictive: pick a draw uniformly, sample its mixture.

    Returns a :class:`Dataset` of ``n_total`` points.
    """
    if n_total < 1:
        raise ValidationError("n_total must be >= 1")
    if bundle is None or len(bundle.draws) == 0:
        raise ValidationError("empty bundle")
    gen = as_generator(rng)
    which = gen.integers(0, bundle.M, size=n_total)
    out = np.empty((n_total, bundle.d))
    for m in np.unique(which):
        slots = np.flatnonzero(which == m)
        out[slots] = bundle.draws[m].sample(slots.shape[0], gen)
    return Dataset(out)


def per_draw_predictive(draw, h, rng):
    """``h`` i.i.d. samples from a single draw's mixture."""
    if h < 1:
        raise ValidationError("h must be >= 1")
    return Dataset(draw.sample(h, rng))


# ---------------------------------------------------------------------------
# Bundle files


def draw_to_record(draw):
    """JSON-ready dict for one draw (the bundle line format)."""
    fam = draw.family
    if fam == "gaussian_uni":
        params = [{"mean": float(k.mean), "var": float(k.variance)} for k in draw.kernels]
    elif fam == "gaussian_multi":
        params = [{"mean": k.mean.tolist(), "cov": k.covariance.tolist()} for k in draw.kernels]
    else:
        params = [{"alpha": float(k.alpha), "beta": float(k.beta)} for k in draw.kernels]
    return {"m": int(draw.draw_index), "family": fam, "weights": [float(w) for w in draw.weights], "params": params}


_PARAM_KEYS = {
    "gaussian_uni": ("mean", "var"),
    "gaussian_multi": ("mean", "cov"),
    "beta": ("alpha", "beta"),
}


def record_to_draw(rec, path=None, line=None):
    """Inverse of :func:`draw_to_record`, raising :class:`ParseError` on bad input."""
    try:
        fam = rec["family"]
        weights = np.asarray(rec["weights"], dtype=float)
        params = rec["params"]
        m = int(rec.get("m", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad draw record ({exc})", path, line) from None
    if fam not in FAMILIES:
        raise ParseError(f"unknown family {fam!r}", path, line)
    if not isinstance(params, list) or len(params) != weights.shape[0]:
        raise ParseError("params length does not match weights", path, line)
    if weights.ndim != 1 or np.any(weights < 0) or abs(weights.sum() - 1.0) > SIMPLEX_TOL:
        raise ParseError(f"weights violate the simplex (sum {weights.sum():.10g})", path, line)
    keys = _PARAM_KEYS[fam]
    try:
        if any(set(p) != set(keys) for p in params):
            raise ParseError(f"{fam} params need exactly keys {keys}", path, line)
        stacked = {key: np.asarray([p[key] for p in params], dtype=float) for key in keys}
        return MixtureDraw.from_params(fam, weights, stacked, draw_index=m)
    except ParseError:
        raise
    except (ValueError, TypeError, AttributeError) as exc:
        raise ParseError(str(exc), path, line) from None


def export_bundle(bundle, path):
    path = Path(path)
    with path.open("w") as fh:
        header = {"model": bundle.model, "d": int(bundle.d), "M": int(bundle.M), "seed": int(bundle.seed)}
        fh.write(json.dumps(header) + "\n")
        for dr in bundle.draws:
            fh.write(json.dumps(draw_to_record(dr)) + "\n")


def ingest_bundle(path):
    """Read a draw bundle written by :func:`export_bundle` or an external sampler."""
    path = Path(path)
    header = None
    draws = []
    family = None
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", str(path), lineno) from None
            if not isinstance(rec, dict):
                raise ParseError("expected a JSON object", str(path), lineno)
            if header is None:
                if "family" in rec:
                    raise ParseError("missing metadata header line", str(path), lineno)
                header = rec
                continue
            dr = record_to_draw(rec, str(path), lineno)
            if family is None:
                family = dr.family
            elif dr.family != family:
                raise ParseError(f"mixed kernel families ({family} then {dr.family})", str(path), lineno)
            if draws and dr.dim != draws[0].dim:
                raise ParseError("draw dimension differs from earlier draws", str(path), lineno)
            draws.append(dr)
    if header is None or not draws:
        raise ParseError("bundle has no draws", str(path))
    try:
        d, M = int(header["d"]), int(header["M"])
        model, seed = str(header["model"]), int(header["seed"])
    except (KeyError, TypeError, ValueError):
        raise ParseError("header must carry model, d, M, seed", str(path), 1) from None
    if M != len(draws):
        raise ParseError(f"header says M={M} but file has {len(draws)} draws", str(path), 1)
    if d != draws[0].dim:
        raise ParseError(f"header says d={d} but draws have d={draws[0].dim}", str(path), 1)
    return DrawBundle(draws, model=model, seed=seed, d=d)


# ---------------------------------------------------------------------------
# Dataset CSV


def read_dataset_csv(path, labels=False):
    """Headerless CSV, one observation per row; optional trailing label column."""
    rows, labs = [], []
    width = None
    with open(path, newline="") as fh:
        for rowno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} columns, found {len(row)}", str(path), rowno)
            try:
                if labels:
                    rows.append([float(v) for v in row[:-1]])
                    labs.append(int(row[-1]))
                else:
                    rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"non-numeric value ({exc})", str(path), rowno) from None
            if not all(math.isfinite(v) for v in rows[-1]):
                raise ParseError("non-finite value", str(path), rowno)
    if not rows or (labels and width < 2):
        raise ParseError("no observations", str(path))
    return Dataset(np.array(rows), np.array(labs) if labels else None)


def write_dataset_csv(data, path, labels=None):
    """Write a dataset as headerless CSV; labels appended when present."""
    labels = data.labels is not None if labels is None else labels
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i in range(data.n):
            row = [repr(float(v)) for v in data.points[i]]
            if labels:
                row.append(str(int(data.labels[i])))
            w.writerow(row)


def load_fixture(name):
    """Bundled benchmark data by name (currently ``galaxy``)."""
    here = Path(__file__).parent / "data"
    path = here / f"{name}.csv"
    if not path.exists():
        raise ValidationError(f"no bundled fixture {name!r}")
    return read_dataset_csv(path)
