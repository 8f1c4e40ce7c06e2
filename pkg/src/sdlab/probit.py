"""Probit regression test problem: g-prior, latent-variable Gibbs, Bayes ratios.

The binary response is modelled through a probit link with a zero-mean
normal prior on the coefficients whose covariance is g (X'X)^{-1} (the
generalised-linear-model extension of Zellner's g-prior, g = n by default).
Testing the nullity of one coefficient makes that coefficient the tested
parameter and the remaining ones the nuisance block; the null model is the
probit on the reduced design with its own g-prior.

Gibbs sampling follows the classic data augmentation: each observation gets
a latent normal variable truncated to the side its response dictates, and
the coefficient block is then conjugate normal given the latents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataError, NumericError, ParameterError
from .estimators import ChainOutput, EmbeddedTestProblem
from .kernels import (
    SpdMatrix,
    normal_logpdf,
    mvn_logpdf,
    sample_truncnorm_signed,
    std_normal_logcdf,
    std_normal_logpdf,
)
from .rng import as_generator

PIMA_COLUMNS = ("glu", "bp", "ped")
PIMA_HEADER = "type,glu,bp,ped"

# default stream ids when a sampler receives a bare int master seed
STREAM_FULL, STREAM_TILDE, STREAM_NULL = 0, 1, 2


@dataclass(frozen=True)
class ProbitData:
    """Design matrix and binary response for one probit model."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.int64))
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ParameterError("design matrix and response sizes disagree")
        if self.X.shape[1] != len(self.columns):
            raise ParameterError("column names do not match the design matrix")
        if not np.isin(self.y, (0, 1)).all():
            raise ParameterError("response must be 0/1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    def drop_column(self, index: int) -> "ProbitData":
        keep = [i for i in range(self.k) if i != index]
        return ProbitData(self.X[:, keep], self.y, tuple(self.columns[i] for i in keep))


def bundled_pima_path() -> Path:
    return Path(resources.files("sdlab").joinpath("data/pima.csv"))


def load_pima(path=None) -> ProbitData:
    """Read the diabetes CSV: header ``type,glu,bp,ped``, no quoting, 0/1 response."""
    p = Path(path) if path is not None else bundled_pima_path()
    if not p.exists():
        raise DataError(f"data file not found: {p}")
    try:
        text = p.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{p} is not valid UTF-8: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise DataError(f"{p} is empty")
    header = lines[0].lstrip("﻿").strip()
    if header != PIMA_HEADER:
        raise DataError(f"{p}: expected header {PIMA_HEADER!r}, found {header!r}")
    ys = []
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.strip().split(",")
        if len(fields) != 4:
            raise DataError(f"{p} row {lineno}: expected 4 fields, got {len(fields)}")
        try:
            values = [float(v) for v in fields]
        except ValueError as exc:
            raise DataError(f"{p} row {lineno}: non-numeric value") from exc
        if values[0] not in (0.0, 1.0):
            raise DataError(f"{p} row {lineno}: type must be 0 or 1, got {fields[0]}")
        ys.append(int(values[0]))
        rows.append(values[1:])
    if not rows:
        raise DataError(f"{p} has a header but no data rows")
    return ProbitData(np.array(rows), np.array(ys), PIMA_COLUMNS)


@dataclass(frozen=True)
class GPriorSpec:
    """Scale g and the index of the tested coefficient (theta0 = 0)."""

    g: Optional[float] = None  # None means g = n
    tested_index: Optional[int] = None  # None means the 'ped' column, else the last

    def resolve(self, data: ProbitData) -> tuple[float, int]:
        g = float(self.g) if self.g is not None else float(data.n)
        if not g > 0:
            raise ParameterError(f"g must be positive, got {g}")
        if self.tested_index is not None:
            j = int(self.tested_index)
        elif "ped" in data.columns:
            j = data.columns.index("ped")
        else:
            j = data.k - 1
        if not 0 <= j < data.k:
            raise ParameterError(f"tested index {j} out of range for k={data.k}")
        return g, j


class ProbitModel:
    """Data plus g-prior with every partitioned covariance precomputed.

    Holds the full-model prior, the null-model prior on the reduced design,
    the conditional prior of the nuisance given the tested coefficient (and
    vice versa), and the block-diagonal prior of the tilde target.
    """

    def __init__(self, data: ProbitData, prior: GPriorSpec = GPriorSpec()):
        self.data = data
        self.g, self.j = prior.resolve(data)
        x = data.X
        self.xtx = SpdMatrix(x.T @ x)
        self.cov_full = SpdMatrix(self.g * self.xtx.inverse())
        self.data_null = data.drop_column(self.j)
        x0 = self.data_null.X
        if x0.shape[1] > 0:
            self.cov_null = SpdMatrix(self.g * SpdMatrix(x0.T @ x0).inverse())
        else:
            self.cov_null = SpdMatrix(np.zeros((0, 0)))

        sigma = self.cov_full.matrix
        j = self.j
        keep = [i for i in range(data.k) if i != j]
        self.var_theta = float(sigma[j, j])
        sigma_pt = sigma[keep, j]
        sigma_pp = sigma[np.ix_(keep, keep)]
        # psi | theta under the joint prior
        self.psi_given_theta_coef = sigma_pt / self.var_theta
        self.cov_psi_given_theta = SpdMatrix(
            sigma_pp - np.outer(sigma_pt, sigma_pt) / self.var_theta
        )
        # theta | psi under the joint prior
        if keep:
            w = SpdMatrix(sigma_pp).solve(sigma_pt)
            self.theta_given_psi_coef = w
            self.var_theta_given_psi = self.var_theta - float(sigma_pt @ w)
        else:
            self.theta_given_psi_coef = np.zeros(0)
            self.var_theta_given_psi = self.var_theta
        # tilde prior: theta-marginal times null-model nuisance prior
        vt = np.zeros((data.k, data.k))
        vt[np.ix_(keep, keep)] = self.cov_null.matrix
        vt[j, j] = self.var_theta
        self.cov_tilde = SpdMatrix(vt)

    def split(self, betas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        keep = [i for i in range(self.data.k) if i != self.j]
        return betas[:, self.j], betas[:, keep]

    def join(self, theta: np.ndarray, psi: np.ndarray) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        betas = np.empty((psi.shape[0], self.data.k))
        keep = [i for i in range(self.data.k) if i != self.j]
        betas[:, keep] = psi
        betas[:, self.j] = t
        return betas


def probit_loglik(beta, data: ProbitData):
    """Probit log likelihood; beta of shape (k,) or a batch of shape (m, k)."""
    beta = np.asarray(beta, dtype=float)
    s = 2.0 * data.y - 1.0
    eta = beta @ data.X.T if beta.ndim > 1 else data.X @ beta
    out = std_normal_logcdf(s * eta).sum(axis=-1)
    return float(out) if beta.ndim == 1 else out


def probit_mle(data: ProbitData, model: str = "full", tested_index: Optional[int] = None):
    """Newton maximum likelihood fit: returns (beta_hat, inverse observed information).

    ``model="null"`` fits the reduced design with the tested column removed.
    """
    if model == "null":
        spec = GPriorSpec(tested_index=tested_index)
        _, j = spec.resolve(data)
        data = data.drop_column(j)
    elif model != "full":
        raise ParameterError(f"model must be 'full' or 'null', got {model!r}")
    x, y = data.X, data.y
    n, k = x.shape
    if k == 0:
        return np.zeros(0), np.zeros((0, 0))
    s = 2.0 * y - 1.0
    beta = np.zeros(k)
    hess = None
    for _ in range(100):
        eta = x @ beta
        lam = s * np.exp(std_normal_logpdf(eta) - std_normal_logcdf(s * eta))
        grad = x.T @ lam
        if np.abs(grad).max() < 1e-8:
            break
        weight = lam * (lam + eta)
        hess = x.T @ (weight[:, None] * x)
        try:
            beta = beta + np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular Hessian in probit Newton iteration") from exc
        if np.abs(beta).max() > 1e4:
            raise NumericError("probit MLE diverged; data may be separated")
    else:
        raise NumericError("probit MLE did not converge in 100 Newton iterations")
    eta = x @ beta
    # zero residual deviance means perfectly separated data: the MLE diverges
    if probit_loglik(beta, data) > -1e-6 * n:
        raise NumericError("probit data are perfectly separated; the MLE diverges")
    lam = s * np.exp(std_normal_logpdf(eta) - std_normal_logcdf(s * eta))
    weight = lam * (lam + eta)
    hess = x.T @ (weight[:, None] * x)
    try:
        info = SpdMatrix(hess)
    except ParameterError as exc:
        raise NumericError("singular information matrix at the probit fit") from exc
    return beta, info.inverse()


def _run_latent_gibbs(x, y, prior: SpdMatrix, t, nburn, gen):
    """Core data-augmentation chain on one design; returns (betas, z draws)."""
    n, k = x.shape
    if k > 0:
        prec = SpdMatrix(x.T @ x + prior.inverse())
        bmat = prec.inverse()
        amat = np.linalg.cholesky(bmat)
    else:
        bmat = np.zeros((0, 0))
        amat = bmat
    positive = y.astype(bool)
    beta = np.zeros(k)
    betas = np.empty((t, k))
    zs = np.empty((t, n))
    total = t + nburn
    for i in range(total):
        eta = x @ beta
        z = sample_truncnorm_signed(gen, eta, positive)
        beta = bmat @ (x.T @ z) + amat @ gen.standard_normal(k)
        if i >= nburn:
            betas[i - nburn] = beta
            zs[i - nburn] = z
    return betas, zs


def gibbs_probit(
    data: ProbitData,
    prior_cov,
    t: int,
    seed,
    target: str = "full",
    tested_index: Optional[int] = None,
    burnin: Optional[int] = None,
) -> ChainOutput:
    """Albert-Chib Gibbs chain for one of the three estimator targets.

    ``full`` and ``tilde`` run on the complete design with the supplied prior
    covariance (the joint g-prior or the block-diagonal tilde prior); draws
    are split into tested/nuisance blocks when ``tested_index`` names a
    column, and stored whole otherwise (e.g. for a chain on the null model's
    own design).  For ``null_conditional`` the tested column is removed and
    ``prior_cov`` must be the prior of the nuisance given the tested value.
    """
    if t < 1:
        raise ParameterError(f"chain length must be >= 1, got {t}")
    nburn = math.ceil(0.1 * t) if burnin is None else int(burnin)
    if nburn < 0:
        raise ParameterError("burnin must be non-negative")
    stream = {"full": STREAM_FULL, "tilde": STREAM_TILDE, "null_conditional": STREAM_NULL}
    if target not in stream:
        raise ParameterError(f"unknown chain target {target!r}")
    gen = as_generator(seed, stream[target])
    prior = prior_cov if isinstance(prior_cov, SpdMatrix) else SpdMatrix(prior_cov)
    seed_val = seed if isinstance(seed, int) else 0

    if target == "null_conditional":
        spec = GPriorSpec(tested_index=tested_index)
        _, j = spec.resolve(data)
        reduced = data.drop_column(j)
        if prior.dim != reduced.k:
            raise ParameterError("prior dimension does not match the reduced design")
        betas, zs = _run_latent_gibbs(reduced.X, reduced.y, prior, t, nburn, gen)
        return ChainOutput(target=target, psi=betas, theta=None, z=zs, seed=seed_val, burnin=nburn)

    if prior.dim != data.k:
        raise ParameterError("prior dimension does not match the design")
    betas, zs = _run_latent_gibbs(data.X, data.y, prior, t, nburn, gen)
    if tested_index is None:
        return ChainOutput(target=target, psi=betas, theta=None, z=zs, seed=seed_val, burnin=nburn)
    _, j = GPriorSpec(tested_index=tested_index).resolve(data)
    keep = [i for i in range(data.k) if i != j]
    return ChainOutput(
        target=target,
        psi=betas[:, keep],
        theta=betas[:, j],
        z=zs,
        seed=seed_val,
        burnin=nburn,
    )


def conditional_theta_bayes_ratio(
    psi,
    z,
    data: ProbitData,
    prior_mean,
    prior_var: float,
    tested_index: int,
    theta0: float = 0.0,
    ordinate_mean=None,
    ordinate_var: Optional[float] = None,
):
    """Closed-form conditional Bayes ratio of the tested coefficient at theta0.

    Given latents z and nuisance psi, the tested coefficient has a conjugate
    normal conditional; the ratio of its ordinate at theta0 to the prior
    ordinate reduces to one log-space expression, so no free-standing density
    version is ever evaluated.  ``prior_mean``/``prior_var`` describe the
    theta-prior used in the update (the marginal for the tilde target, the
    conditional given psi for the full target); the reference ordinate in the
    denominator defaults to that same prior, and can be pointed at the
    marginal prior instead via ``ordinate_mean``/``ordinate_var``.

    Vectorized: psi (T, p), z (T, n) -> (T,) ratios.
    """
    if not prior_var > 0:
        raise ParameterError(f"prior variance must be positive, got {prior_var}")
    x = data.X
    j = int(tested_index)
    xj = x[:, j]
    keep = [i for i in range(data.k) if i != j]
    a = float(xj @ xj)
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    b = z @ xj - psi @ (x[:, keep].T @ xj)
    post_var = 1.0 / (a + 1.0 / prior_var)
    post_mean = (b + np.asarray(prior_mean, dtype=float) / prior_var) * post_var
    om = prior_mean if ordinate_mean is None else ordinate_mean
    ov = prior_var if ordinate_var is None else ordinate_var
    log_ratio = normal_logpdf(theta0, post_mean, post_var) - normal_logpdf(theta0, om, ov)
    return np.exp(log_ratio)


def probit_problem(data: ProbitData, prior: GPriorSpec = GPriorSpec()) -> EmbeddedTestProblem:
    """Wire the probit model into the estimator interface."""
    model = ProbitModel(data, prior)
    return problem_from_model(model)


def problem_from_model(model: ProbitModel) -> EmbeddedTestProblem:
    j = model.j
    data = model.data

    def log_prior_null(psi):
        psi = np.atleast_2d(np.asarray(psi, dtype=float))
        return mvn_logpdf(psi, np.zeros(model.cov_null.dim), model.cov_null)

    def log_prior_cond(psi, theta):
        psi = np.atleast_2d(np.asarray(psi, dtype=float))
        means = np.outer(np.asarray(theta, dtype=float), model.psi_given_theta_coef)
        return mvn_logpdf(psi, means, model.cov_psi_given_theta)

    def bayes_ratio_tilde(psi, z):
        return conditional_theta_bayes_ratio(
            psi, z, data, 0.0, model.var_theta, j, theta0=0.0
        )

    def bayes_ratio_full(psi, z):
        psi2 = np.atleast_2d(np.asarray(psi, dtype=float))
        cond_mean = psi2 @ model.theta_given_psi_coef
        return conditional_theta_bayes_ratio(
            psi,
            z,
            data,
            cond_mean,
            model.var_theta_given_psi,
            j,
            theta0=0.0,
            ordinate_mean=0.0,
            ordinate_var=model.var_theta,
        )

    def sample_full(t, seed, burnin=None):
        return gibbs_probit(data, model.cov_full, t, seed, "full", j, burnin)

    def sample_tilde(t, seed, burnin=None):
        return gibbs_probit(data, model.cov_tilde, t, seed, "tilde", j, burnin)

    def sample_null_conditional(t, seed, burnin=None):
        return gibbs_probit(
            data, model.cov_psi_given_theta, t, seed, "null_conditional", j, burnin
        )

    return EmbeddedTestProblem(
        theta0=0.0,
        log_prior_null=log_prior_null,
        log_prior_cond=log_prior_cond,
        bayes_ratio_tilde=bayes_ratio_tilde,
        bayes_ratio_full=bayes_ratio_full,
        log_prior_theta0=normal_logpdf(0.0, 0.0, model.var_theta),
        sample_full=sample_full,
        sample_tilde=sample_tilde,
        sample_null_conditional=sample_null_conditional,
    )
