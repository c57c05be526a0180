"""Probability kernels and the seeded random-stream contract.

Three kernel families are supported: univariate Gaussian, multivariate
Gaussian with full covariance, and Beta on [0, 1].  Kernels are immutable
value objects; vectorized helpers at the bottom of the module evaluate many
components at once and are what the mixture code uses internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, xlog1py, xlogy

from .errors import CovarianceError, DimensionError, KernelError

LOG_2PI = math.log(2.0 * math.pi)

#: Relative ridge used when a covariance matrix is not Cholesky-factorizable.
RIDGE_EPS = 1e-6

FAMILIES = ("gaussian_uni", "gaussian_multi", "beta")


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    Sub-streams for nested work (e.g. one per ``(k, restart)``) are derived
    with :meth:`spawn`; the derivation depends only on the key path, never on
    call order, so results do not depend on how work is scheduled.
    """

    seed: int
    stream_id: int = 0
    path: tuple = field(default=())

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")

    def spawn(self, *ids):
        return RngStream(self.seed, self.stream_id, self.path + tuple(int(i) for i in ids))

    def generator(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng):
    """Accept an :class:`RngStream` or an existing ``numpy`` Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# Kernel types


@dataclass(frozen=True)
class GaussianUni:
    mean: float
    variance: float

    family = "gaussian_uni"

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.variance)):
            raise KernelError("GaussianUni parameters must be finite")
        if not self.variance > 0:
            raise KernelError(f"GaussianUni variance must be > 0, got {self.variance}")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True, eq=False)
class GaussianMulti:
    mean: np.ndarray
    covariance: np.ndarray

    family = "gaussian_multi"

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if mean.ndim != 1:
            raise KernelError("mean must be a vector")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise DimensionError(f"covariance shape {cov.shape} does not match mean dimension {d}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise KernelError("GaussianMulti parameters must be finite")
        if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
            raise KernelError("covariance must be symmetric")
        # raises CovarianceError when not factorizable after the ridge
        regularized_cholesky(cov)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self):
        return self.mean.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, GaussianMulti)
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.covariance, other.covariance)
        )

    def __hash__(self):
        return hash((self.mean.tobytes(), self.covariance.tobytes()))


@dataclass(frozen=True)
class Beta:
    alpha: float
    beta: float

    family = "beta"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise KernelError(f"Beta parameters must be > 0, got ({self.alpha}, {self.beta})")
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise KernelError("Beta parameters must be finite")

    @property
    def dim(self):
        return 1


# ---------------------------------------------------------------------------
# Cholesky with ridge fallback


def regularized_cholesky(cov, eps=RIDGE_EPS):
    """Lower Cholesky factor of ``cov``.

    The plain factorization is tried first.  If it fails, a ridge of
    ``eps * trace(cov) / d`` is added to the diagonal and the factorization
    retried; a second failure raises :class:`CovarianceError`.
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    d = cov.shape[-1]
    ridge = eps * np.trace(cov) / d
    if not ridge > 0:
        raise CovarianceError("covariance is not positive definite and has zero trace")
    try:
        return np.linalg.cholesky(cov + ridge * np.eye(d))
    except np.linalg.LinAlgError:
        raise CovarianceError("covariance is not positive definite after ridge regularization") from None


def batched_cholesky(covs, eps=RIDGE_EPS):
    """Cholesky factors for a stack of covariance matrices, shape (K, d, d)."""
    covs = np.asarray(covs, dtype=float)
    try:
        return np.linalg.cholesky(covs)
    except np.linalg.LinAlgError:
        return np.stack([regularized_cholesky(c, eps) for c in covs])


# ---------------------------------------------------------------------------
# Single-kernel operations


def _point_vector(kernel, point):
    x = np.atleast_1d(np.asarray(point, dtype=float))
    if x.ndim != 1 or x.shape[0] != kernel.dim:
        raise DimensionError(f"point of dimension {x.shape} does not match kernel dimension {kernel.dim}")
    return x


def log_density(kernel, point):
    """Natural-log density of ``kernel`` at one point."""
    x = _point_vector(kernel, point)
    return float(component_logpdf(kernel.family, stack_params([kernel]), x[None, :])[0, 0])


def sample(kernel, rng, n):
    """Draw ``n`` i.i.d. points; returns an array of shape (n, d)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    gen = as_generator(rng)
    if kernel.family == "gaussian_uni":
        out = kernel.mean + math.sqrt(kernel.variance) * gen.standard_normal(n)
        return out[:, None]
    if kernel.family == "gaussian_multi":
        chol = regularized_cholesky(kernel.covariance)
        z = gen.standard_normal((n, kernel.dim))
        return kernel.mean + z @ chol.T
    return gen.beta(kernel.alpha, kernel.beta, size=n)[:, None]


# ---------------------------------------------------------------------------
# Vectorized, stacked-parameter helpers


def stack_params(kernels):
    """Stack the parameters of same-family kernels into arrays.

    Returns a dict whose keys depend on the family:
    ``gaussian_uni`` -> ``mean (K,)``, ``var (K,)``;
    ``gaussian_multi`` -> ``mean (K, d)``, ``cov (K, d, d)``;
    ``beta`` -> ``alpha (K,)``, ``beta (K,)``.
    """
    family = kernels[0].family
    if any(k.family != family for k in kernels):
        raise KernelError("kernels must share a family")
    if family == "gaussian_uni":
        return {
            "mean": np.array([k.mean for k in kernels], dtype=float),
            "var": np.array([k.variance for k in kernels], dtype=float),
        }
    if family == "gaussian_multi":
        dims = {k.dim for k in kernels}
        if len(dims) != 1:
            raise DimensionError("kernels must share a dimension")
        return {
            "mean": np.stack([k.mean for k in kernels]),
            "cov": np.stack([k.covariance for k in kernels]),
        }
    return {
        "alpha": np.array([k.alpha for k in kernels], dtype=float),
        "beta": np.array([k.beta for k in kernels], dtype=float),
    }


def unstack_params(family, params):
    """Inverse of :func:`stack_params`."""
    if family == "gaussian_uni":
        return [GaussianUni(float(m), float(v)) for m, v in zip(params["mean"], params["var"])]
    if family == "gaussian_multi":
        return [GaussianMulti(m, c) for m, c in zip(params["mean"], params["cov"])]
    if family == "beta":
        return [Beta(float(a), float(b)) for a, b in zip(params["alpha"], params["beta"])]
    raise KernelError(f"unknown kernel family {family!r}")


def gaussian_logpdf(X, means, covs, chol=None):
    """Log-density of each point under each Gaussian component.

    Parameters
    ----------
    X : ndarray, shape (N, d)
    means : ndarray, shape (K, d)
    covs : ndarray, shape (K, d, d)
    chol : ndarray, optional
        Precomputed lower Cholesky factors of ``covs``.

    Returns
    -------
    ndarray, shape (N, K)
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    if chol is None:
        chol = batched_cholesky(covs)
    half_logdet = np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    if d == 1:
        sd = chol[:, 0, 0]
        z = (X[:, 0][:, None] - means[:, 0][None, :]) / sd[None, :]
        maha = z * z
    else:
        inv_chol = np.linalg.inv(chol)
        diff = X[None, :, :] - means[:, None, :]
        z = np.einsum("kij,knj->kni", inv_chol, diff)
        maha = np.einsum("kni,kni->nk", z, z)
    return -0.5 * (d * LOG_2PI + maha) - half_logdet[None, :]


def component_logpdf(family, params, X):
    """Per-component log-densities, shape (N, K), for stacked parameters."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("points must be a 2-D array (N, d)")
    if family == "gaussian_uni":
        if X.shape[1] != 1:
            raise DimensionError(f"univariate kernel evaluated at {X.shape[1]}-D points")
        m, v = params["mean"], params["var"]
        diff = X[:, 0][:, None] - m[None, :]
        return -0.5 * (LOG_2PI + np.log(v)[None, :] + diff * diff / v[None, :])
    if family == "gaussian_multi":
        if X.shape[1] != params["mean"].shape[1]:
            raise DimensionError(
                f"{params['mean'].shape[1]}-D kernel evaluated at {X.shape[1]}-D points"
            )
        return gaussian_logpdf(X, params["mean"], params["cov"])
    if family == "beta":
        if X.shape[1] != 1:
            raise DimensionError("Beta kernel evaluated at multivariate points")
        a, b = params["alpha"], params["beta"]
        x = X[:, 0][:, None]
        inside = (x >= 0.0) & (x <= 1.0)
        xc = np.clip(x, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = xlogy(a - 1.0, xc) + xlog1py(b - 1.0, -xc) - betaln(a, b)
        return np.where(inside, out, -np.inf)
    raise KernelError(f"unknown kernel family {family!r}")


def sample_components(family, params, counts, gen):
    """Sample ``counts[q]`` points from component ``q``; returns (sum(counts), d)."""
    counts = np.asarray(counts, dtype=np.int64)
    idx = np.repeat(np.arange(counts.shape[0]), counts)
    n = idx.shape[0]
    if family == "gaussian_uni":
        z = gen.standard_normal(n)
        return (params["mean"][idx] + np.sqrt(params["var"][idx]) * z)[:, None]
    if family == "gaussian_multi":
        d = params["mean"].shape[1]
        chol = batched_cholesky(params["cov"])
        z = gen.standard_normal((n, d))
        return params["mean"][idx] + np.einsum("nij,nj->ni", chol[idx], z)
    if family == "beta":
        return gen.beta(params["alpha"][idx], params["beta"][idx])[:, None]
    raise KernelError(f"unknown kernel family {family!r}")
