"""Distribution and linear-algebra primitives.

Only the distributions the embedded-model machinery needs live here: the
standard normal CDF, one-sided truncated normals, the inverse gamma, and the
multivariate normal with an SPD covariance.  All samplers draw from an
:class:`~sdlab.rng.RngStream` (or a Generator derived from one) and are
bit-reproducible given the stream.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special
from scipy.linalg import solve_triangular

from .errors import NumericError, ParameterError
from .rng import as_generator

LOG_TWO_PI = math.log(2.0 * math.pi)

# Standardized truncation point beyond which the exponential-proposal
# rejection sampler takes over from plain inverse-CDF sampling.
_TAIL_THRESHOLD = 0.5


class SpdMatrix:
    """Dense symmetric positive-definite matrix with a cached Cholesky factor.

    Rejects non-symmetric input and matrices whose smallest Cholesky pivot
    falls below ``1e-12`` times the largest diagonal entry (an early signal
    of collinear design columns).
    """

    def __init__(self, matrix):
        a = np.array(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError(f"expected a square matrix, got shape {a.shape}")
        k = a.shape[0]
        if k > 0:
            scale = np.abs(a).max()
            if scale > 0 and np.abs(a - a.T).max() > 1e-8 * scale:
                raise ParameterError("matrix is not symmetric")
            try:
                chol = np.linalg.cholesky(a)
            except np.linalg.LinAlgError as exc:
                raise ParameterError("matrix is not positive definite") from exc
            pivots = np.diag(chol) ** 2
            if pivots.min() < 1e-12 * a.diagonal().max():
                raise ParameterError("matrix is numerically singular (pivot below threshold)")
        else:
            chol = np.zeros((0, 0))
        self._a = a
        self._a.setflags(write=False)
        self._chol = chol
        self._chol.setflags(write=False)

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self._a

    @property
    def chol(self) -> np.ndarray:
        """Lower-triangular factor L with L @ L.T equal to the matrix."""
        return self._chol

    def logdet(self) -> float:
        if self.dim == 0:
            return 0.0
        return 2.0 * float(np.log(np.diag(self._chol)).sum())

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b via the cached factor."""
        if self.dim == 0:
            return np.zeros_like(np.asarray(b, dtype=float))
        y = solve_triangular(self._chol, b, lower=True)
        return solve_triangular(self._chol, y, lower=True, trans="T")

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.dim))

    def half_mahalanobis(self, dev: np.ndarray) -> np.ndarray:
        """0.5 * dev^T A^{-1} dev for one deviation vector or a batch of rows."""
        dev = np.asarray(dev, dtype=float)
        if self.dim == 0:
            return np.zeros(dev.shape[:-1]) if dev.ndim > 1 else 0.0
        y = solve_triangular(self._chol, np.atleast_2d(dev).T, lower=True)
        q = 0.5 * np.einsum("ij,ij->j", y, y)
        return q if dev.ndim > 1 else float(q[0])


def as_spd(cov) -> SpdMatrix:
    return cov if isinstance(cov, SpdMatrix) else SpdMatrix(cov)


def std_normal_cdf(t):
    """Standard normal CDF, accurate to well below 1e-12 in absolute error."""
    return special.ndtr(t)


def std_normal_logcdf(t):
    """log Phi(t), stable far into the lower tail."""
    return special.log_ndtr(t)


def std_normal_logpdf(t):
    t = np.asarray(t, dtype=float)
    out = -0.5 * t * t - 0.5 * LOG_TWO_PI
    return float(out) if out.ndim == 0 else out


def normal_logpdf(v, mean, var):
    v = np.asarray(v, dtype=float)
    out = -0.5 * (np.log(2.0 * math.pi * var) + (v - mean) ** 2 / var)
    return float(out) if np.ndim(out) == 0 else out


def _std_truncnorm_lower(gen: np.random.Generator, alpha: np.ndarray) -> np.ndarray:
    """Standard normal conditioned on w > alpha, elementwise over alpha.

    Inverse-CDF for alpha <= 0.5; Robert's exponential-proposal rejection in
    the tail.  Draw consumption depends only on (alpha, stream), so output is
    reproducible.
    """
    alpha = np.asarray(alpha, dtype=float)
    out = np.empty_like(alpha)

    easy = alpha <= _TAIL_THRESHOLD
    if easy.any():
        a = alpha[easy]
        lo = special.ndtr(a)
        w = special.ndtri(lo + gen.random(a.shape) * (1.0 - lo))
        bad = ~(w > a)
        while bad.any():
            w[bad] = special.ndtri(lo[bad] + gen.random(int(bad.sum())) * (1.0 - lo[bad]))
            bad = ~(w > a)
        out[easy] = w

    tail = ~easy
    if tail.any():
        a = alpha[tail]
        lam = 0.5 * (a + np.sqrt(a * a + 4.0))
        w = np.empty_like(a)
        todo = np.ones(a.shape, dtype=bool)
        while todo.any():
            idx = np.flatnonzero(todo)
            m = idx.size
            prop = a[idx] + gen.standard_exponential(m) / lam[idx]
            accept = (gen.random(m) <= np.exp(-0.5 * (prop - lam[idx]) ** 2)) & (prop > a[idx])
            hit = idx[accept]
            w[hit] = prop[accept]
            todo[hit] = False
        out[tail] = w
    return out


def sample_truncated_normal(rng, mu, sigma, side: str = "above"):
    """Draw from N(mu, sigma^2) restricted to one side of zero.

    ``side="above"`` keeps the half-line (0, inf); ``side="below"`` keeps
    (-inf, 0).  ``mu`` may be a scalar or array; draws are elementwise and
    strictly inside the requested half-line.
    """
    if not (np.isscalar(sigma) and sigma > 0):
        raise ParameterError(f"sigma must be a positive scalar, got {sigma!r}")
    if side not in ("above", "below"):
        raise ParameterError(f"side must be 'above' or 'below', got {side!r}")
    gen = as_generator(rng)
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    sign = 1.0 if side == "above" else -1.0
    # reduce to a standard normal truncated below at alpha = -sign*mu/sigma
    alpha = -sign * mu_arr / sigma
    w = _std_truncnorm_lower(gen, alpha)
    result = mu_arr + sign * sigma * w
    bad = ~(sign * result > 0)
    while bad.any():  # float roundoff can land exactly on the bound
        w = _std_truncnorm_lower(gen, alpha[bad])
        result[bad] = mu_arr[bad] + sign * sigma * w
        bad = ~(sign * result > 0)
    return float(result[0]) if np.ndim(mu) == 0 else result


def sample_truncnorm_signed(gen: np.random.Generator, mean: np.ndarray, positive: np.ndarray) -> np.ndarray:
    """Unit-variance truncated normal draws with prescribed signs.

    Element i is N(mean_i, 1) conditioned on being > 0 where ``positive`` is
    true and < 0 elsewhere.  One vectorized pass; used by the latent-variable
    Gibbs updates.
    """
    sign = np.where(positive, 1.0, -1.0)
    alpha = -sign * mean
    z = mean + sign * _std_truncnorm_lower(gen, alpha)
    bad = ~(sign * z > 0)
    while bad.any():
        z[bad] = mean[bad] + sign[bad] * _std_truncnorm_lower(gen, alpha[bad])
        bad = ~(sign * z > 0)
    return z


def inv_gamma_logpdf(theta, shape, rate):
    """log density of the inverse gamma with the rate convention:

    pdf(theta) = rate^shape / Gamma(shape) * theta^(-shape-1) * exp(-rate/theta).
    """
    if not shape > 0 or not rate > 0:
        raise ParameterError("shape and rate must be positive")
    theta_arr = np.asarray(theta, dtype=float)
    if not (theta_arr > 0).all():
        raise ParameterError("inverse gamma density is defined for theta > 0 only")
    out = (
        shape * math.log(rate)
        - special.gammaln(shape)
        - (shape + 1.0) * np.log(theta_arr)
        - rate / theta_arr
    )
    return float(out) if np.ndim(theta) == 0 else out


def sample_inv_gamma(rng, shape, rate, size=None):
    """Draw from the inverse gamma (rate convention) as rate / Gamma(shape, 1)."""
    if not shape > 0 or not rate > 0:
        raise ParameterError("shape and rate must be positive")
    gen = as_generator(rng)
    return rate / gen.gamma(shape, 1.0, size)


def mvn_logpdf(v, mean, cov):
    """Multivariate normal log density.

    ``v`` is one point of dimension k or a batch of shape (m, k); ``mean``
    may likewise be a single vector or a batch of per-row means.  A dimension
    of k = 0 yields log density 0 (empty product).
    """
    spd = as_spd(cov)
    v = np.asarray(v, dtype=float)
    mean = np.asarray(mean, dtype=float)
    batched = v.ndim > 1 or mean.ndim > 1
    k = spd.dim
    if (v.shape[-1] if v.ndim else None) != k or (mean.shape[-1] if mean.ndim else None) != k:
        # allow k=0 with empty inputs
        if not (k == 0 and v.size == 0 and mean.size == 0):
            raise ParameterError(
                f"dimension mismatch: point {v.shape}, mean {mean.shape}, cov {k}x{k}"
            )
    if k == 0:
        m = v.shape[0] if v.ndim > 1 else (mean.shape[0] if mean.ndim > 1 else None)
        return np.zeros(m) if m is not None else 0.0
    dev = np.atleast_2d(v) - np.atleast_2d(mean)
    quad = spd.half_mahalanobis(dev)
    out = -0.5 * (k * LOG_TWO_PI + spd.logdet()) - quad
    return out if batched else float(out[0])


def sample_mvn(rng, mean, cov, size=None):
    """Draw from N(mean, cov); returns shape (k,) or (size, k)."""
    spd = as_spd(cov)
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (spd.dim,):
        raise ParameterError(f"mean has shape {mean.shape}, expected ({spd.dim},)")
    gen = as_generator(rng)
    if size is None:
        return mean + spd.chol @ gen.standard_normal(spd.dim)
    return mean + gen.standard_normal((int(size), spd.dim)) @ spd.chol.T


def logsumexp_mean(logw: np.ndarray) -> float:
    """log of the arithmetic mean of exp(logw), guarded against total underflow."""
    logw = np.asarray(logw, dtype=float)
    if logw.size == 0:
        raise ParameterError("empty log-weight array")
    top = logw.max()
    if not np.isfinite(top):
        raise NumericError("all log weights are non-finite; mean underflows")
    return float(top + np.log(np.exp(logw - top).mean()))
