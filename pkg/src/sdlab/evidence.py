"""Marginal-likelihood estimators used in the five-method comparison.

Chib's identity evaluated at a high-density point with a Rao-Blackwellized
posterior ordinate from the Gibbs output; plain importance sampling from the
MLE asymptotic normal; and an iterative optimal-bridge estimate between the
completed null posterior and the full posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError
from .estimators import ChainOutput, batch_means_se
from .kernels import SpdMatrix, logsumexp_mean, mvn_logpdf, normal_logpdf, sample_mvn
from .probit import ProbitData, probit_loglik, probit_mle
from .rng import as_generator


def _chain_betas(chain: ChainOutput, join=None) -> np.ndarray:
    """Coefficient draws of the chain's own model, shape (T, k)."""
    psi = np.atleast_2d(chain.psi) if chain.psi.ndim == 1 else chain.psi
    if chain.theta is None:
        return psi
    if join is not None:
        return join(chain.theta, psi)
    raise ParameterError("need a join rule to reassemble coefficients")


def chib_evidence(
    data: ProbitData,
    prior_cov,
    chain: ChainOutput,
    beta_star=None,
    join=None,
    with_se: bool = False,
):
    """Log marginal likelihood from the Gibbs output via Chib's identity.

    log m = log f(x|b*) + log pi(b*) - log pihat(b*|x), with the posterior
    ordinate Rao-Blackwellized over the conjugate coefficient conditional at
    each stored latent draw.  ``beta_star`` defaults to the posterior mean.
    """
    if chain.size < 1:
        raise ParameterError("chib_evidence: empty chain")
    if chain.z is None:
        raise ParameterError("chib_evidence needs stored latent draws")
    prior = prior_cov if isinstance(prior_cov, SpdMatrix) else SpdMatrix(prior_cov)
    betas = _chain_betas(chain, join)
    if betas.shape[1] != data.k or prior.dim != data.k:
        raise ParameterError("chain, prior, and design dimensions disagree")
    if beta_star is None:
        beta_star = betas.mean(axis=0)
    beta_star = np.asarray(beta_star, dtype=float)

    x = data.X
    if data.k > 0:
        prec = SpdMatrix(x.T @ x + prior.inverse())
        bmat = SpdMatrix(prec.inverse())
        means = (chain.z @ x) @ bmat.matrix
        log_ord_seq = mvn_logpdf(beta_star[None, :], means, bmat)
    else:
        log_ord_seq = np.zeros(chain.size)
    log_ord = logsumexp_mean(log_ord_seq)
    if not np.isfinite(log_ord):
        raise NumericError("posterior ordinate estimate is not finite")
    log_ml = (
        probit_loglik(beta_star, data)
        + mvn_logpdf(beta_star, np.zeros(data.k), prior)
        - log_ord
    )
    if not with_se:
        return float(log_ml)
    # relative error of the ordinate mean is, to first order, the error of log m
    rel = np.exp(log_ord_seq - log_ord)
    return float(log_ml), batch_means_se(rel)


def is_evidence(
    data: ProbitData,
    prior_cov,
    t: int,
    seed,
    mle=None,
    with_diagnostics: bool = False,
):
    """Importance-sampling log marginal likelihood with the MLE normal proposal.

    Draws from N(beta_hat, Sigma_hat) and averages prior x likelihood over
    proposal in log space with a max shift.  The weight coefficient of
    variation is reported as the quality diagnostic.
    """
    if t < 1:
        raise ParameterError(f"sample size must be >= 1, got {t}")
    prior = prior_cov if isinstance(prior_cov, SpdMatrix) else SpdMatrix(prior_cov)
    if prior.dim != data.k:
        raise ParameterError("prior and design dimensions disagree")
    gen = as_generator(seed)
    if data.k == 0:
        # no parameters: the evidence is the likelihood itself, weights constant
        log_ml, cv = probit_loglik(np.zeros(0), data), 0.0
        return (log_ml, cv) if with_diagnostics else log_ml
    beta_hat, sigma_hat = mle if mle is not None else probit_mle(data)
    qcov = SpdMatrix(sigma_hat)
    draws = sample_mvn(gen, beta_hat, qcov, size=t)
    logw = (
        mvn_logpdf(draws, np.zeros(data.k), prior)
        + probit_loglik(draws, data)
        - mvn_logpdf(draws, beta_hat, qcov)
    )
    log_ml = logsumexp_mean(logw)
    if not with_diagnostics:
        return float(log_ml)
    w = np.exp(logw - logw.max())
    cv = float(w.std() / w.mean())
    return float(log_ml), cv


@dataclass(frozen=True)
class ConditionalGaussian:
    """theta | psi ~ N(base + coef . (psi - anchor), var)."""

    base: float
    anchor: np.ndarray
    coef: np.ndarray
    var: float

    def mean(self, psi: np.ndarray) -> np.ndarray:
        psi = np.atleast_2d(np.asarray(psi, dtype=float))
        return self.base + (psi - self.anchor) @ self.coef

    def logpdf(self, theta, psi) -> np.ndarray:
        return normal_logpdf(np.asarray(theta, dtype=float), self.mean(psi), self.var)

    def sample(self, gen, psi: np.ndarray) -> np.ndarray:
        m = self.mean(psi)
        return m + math.sqrt(self.var) * gen.standard_normal(m.shape[0])


def mle_conditional_completion(beta_hat, sigma_hat, tested_index: int) -> ConditionalGaussian:
    """Gaussian of the tested coefficient given the rest under the MLE asymptotic joint."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    j = int(tested_index)
    keep = [i for i in range(beta_hat.size) if i != j]
    s_tt = float(sigma_hat[j, j])
    if keep:
        s_tp = sigma_hat[j, keep]
        s_pp = sigma_hat[np.ix_(keep, keep)]
        coef = SpdMatrix(s_pp).solve(s_tp)
        var = s_tt - float(s_tp @ coef)
    else:
        coef = np.zeros(0)
        var = s_tt
    if not var > 0:
        raise NumericError("conditional completion variance is not positive")
    return ConditionalGaussian(
        base=float(beta_hat[j]), anchor=beta_hat[keep], coef=coef, var=var
    )


def complete_null_chain(chain_null: ChainOutput, q_cond: ConditionalGaussian, seed) -> np.ndarray:
    """Draw the tested coefficient for each null-chain draw from q(theta|psi)."""
    gen = as_generator(seed)
    psi = np.atleast_2d(chain_null.psi) if chain_null.psi.ndim == 1 else chain_null.psi
    return q_cond.sample(gen, psi)


@dataclass
class BridgeResult:
    estimate: float
    iterations: int
    iterates: list
    converged: bool


def bridge_bf(
    data: ProbitData,
    cov_null,
    cov_full,
    tested_index: int,
    chain_null: ChainOutput,
    theta_completed: np.ndarray,
    chain_full: ChainOutput,
    q_cond: ConditionalGaussian,
    join,
    iterations: int = 200,
    tol: float = 1e-10,
    return_details: bool = False,
):
    """Iterative optimal-bridge estimate of the Bayes factor.

    The null posterior is completed with theta ~ q(theta|psi) so both draw
    sets live on the full coefficient space; the bridge then runs between
    h0 = f(x|theta0, psi) pi0(psi) q(theta|psi) (normalizer m0) and
    h1 = f(x|theta, psi) pi1(theta, psi) (normalizer m1).  The fixed point is
    iterated in log-shifted space until the relative change drops below
    ``tol``.
    """
    if chain_null.size < 1 or chain_full.size < 1:
        raise ParameterError("bridge_bf: empty chain")
    prior0 = cov_null if isinstance(cov_null, SpdMatrix) else SpdMatrix(cov_null)
    prior1 = cov_full if isinstance(cov_full, SpdMatrix) else SpdMatrix(cov_full)
    j = int(tested_index)
    data_null = data.drop_column(j)
    theta_completed = np.asarray(theta_completed, dtype=float)
    if theta_completed.shape[0] != chain_null.size:
        raise ParameterError("completion draws do not match the null chain length")

    def log_h0(theta, psi):
        zero_psi = np.zeros(prior0.dim) if prior0.dim else np.zeros(0)
        return (
            probit_loglik(psi, data_null)
            + mvn_logpdf(psi, zero_psi, prior0)
            + q_cond.logpdf(theta, psi)
        )

    def log_h1(theta, psi):
        betas = join(theta, psi)
        return probit_loglik(betas, data) + mvn_logpdf(betas, np.zeros(data.k), prior1)

    psi_null = np.atleast_2d(chain_null.psi) if chain_null.psi.ndim == 1 else chain_null.psi
    psi_full = np.atleast_2d(chain_full.psi) if chain_full.psi.ndim == 1 else chain_full.psi
    l_null = log_h0(theta_completed, psi_null) - log_h1(theta_completed, psi_null)
    l_full = log_h0(chain_full.theta, psi_full) - log_h1(chain_full.theta, psi_full)

    n_null, n_full = chain_null.size, chain_full.size
    s_null = n_null / (n_null + n_full)
    s_full = n_full / (n_null + n_full)
    shift = float(np.median(l_null))
    e_null = np.exp(l_null - shift)
    e_full = np.exp(l_full - shift)

    rho = 1.0
    iterates = []
    converged = False
    it = 0
    for it in range(1, iterations + 1):
        num = np.mean(e_full / (s_null * e_full + s_full * rho))
        den = np.mean(1.0 / (s_null * e_null + s_full * rho))
        rho_new = num / den
        if not np.isfinite(rho_new) or rho_new <= 0:
            raise NumericError("bridge fixed point diverged")
        iterates.append(rho_new * math.exp(shift))
        change = abs(rho_new - rho) / rho_new
        rho = rho_new
        if change < tol:
            converged = True
            break
    if not converged:
        raise NumericError(f"bridge fixed point did not converge in {iterations} iterations")
    estimate = rho * math.exp(shift)
    if return_details:
        return BridgeResult(estimate=estimate, iterations=it, iterates=iterates, converged=converged)
    return estimate
