"""Gaussian / inverse-gamma toy test problem with every quantity in closed form.

The alternative model draws the observation x from N(psi, theta) with
psi | theta ~ N(0, theta) and theta ~ InvGamma(1, 1); the null pins
theta0 = 1, under which psi ~ N(0, 1).  Everything of interest — both
marginal likelihoods, the Bayes factor, the posterior marginal of theta —
has a closed form, which makes this model the repository's ground-truth
oracle for the Monte Carlo estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .estimators import ChainOutput, EmbeddedTestProblem
from .rng import as_generator

THETA0 = 1.0
GAMMA_3_2 = math.gamma(1.5)  # sqrt(pi)/2

# default stream ids when a sampler receives a bare int master seed
STREAM_FULL, STREAM_TILDE, STREAM_NULL = 0, 1, 2

_LOG_TWO_PI = math.log(2.0 * math.pi)


def m0_closed(x: float) -> float:
    """Null-model marginal likelihood: N(0, 2) density at x."""
    return math.exp(-x * x / 4.0) / (math.sqrt(2.0) * math.sqrt(2.0 * math.pi))


def m1_closed(x: float) -> float:
    """Alternative-model marginal likelihood."""
    return (1.0 + x * x / 4.0) ** -1.5 * GAMMA_3_2 / (math.sqrt(2.0) * math.sqrt(2.0 * math.pi))


def bf_closed(x: float) -> float:
    """Exact Bayes factor m0(x)/m1(x)."""
    return (1.0 + x * x / 4.0) ** 1.5 * math.exp(-x * x / 4.0) / GAMMA_3_2


def posterior_marginal_theta(theta, x: float):
    """Posterior marginal density of theta: InvGamma(3/2, 1 + x^2/4)."""
    theta_arr = np.asarray(theta, dtype=float)
    if not (theta_arr > 0).all():
        raise ParameterError("theta must be positive")
    b = 1.0 + x * x / 4.0
    out = b**1.5 / GAMMA_3_2 * theta_arr**-2.5 * np.exp(-b / theta_arr)
    return float(out) if np.ndim(theta) == 0 else out


@dataclass(frozen=True)
class ToyModel:
    """Observation plus the fixed tested value and fixed theta-prior."""

    x: float
    theta0: float = THETA0

    def m0(self) -> float:
        return m0_closed(self.x)

    def m1(self) -> float:
        return m1_closed(self.x)

    def bayes_factor(self) -> float:
        return bf_closed(self.x)


def _empty_to_chain(target, theta, psi, seed, burnin):
    return ChainOutput(
        target=target,
        psi=np.asarray(psi, dtype=float),
        theta=None if theta is None else np.asarray(theta, dtype=float),
        z=None,
        seed=seed,
        burnin=burnin,
    )


def _resolve_burnin(t: int, burnin) -> int:
    if burnin is None:
        return math.ceil(0.1 * t)
    if burnin < 0:
        raise ParameterError("burnin must be non-negative")
    return int(burnin)


def gibbs_full(x: float, t: int, seed, burnin=None) -> ChainOutput:
    """Gibbs sampler for the joint posterior of (theta, psi) given x.

    Alternates theta | psi, x ~ InvGamma(2, 1 + psi^2/2 + (x-psi)^2/2) and
    psi | theta, x ~ N(x/2, theta/2).  The shape parameters are constant, so
    the gamma and normal innovations are pregenerated in bulk and the
    recursion itself is a cheap scalar loop.
    """
    if t < 1:
        raise ParameterError(f"chain length must be >= 1, got {t}")
    nburn = _resolve_burnin(t, burnin)
    total = t + nburn
    gen = as_generator(seed, STREAM_FULL)
    gammas = gen.gamma(2.0, 1.0, total).tolist()
    normals = gen.standard_normal(total).tolist()
    half_x = x / 2.0
    psi = half_x
    thetas = [0.0] * t
    psis = [0.0] * t
    sqrt = math.sqrt
    for i in range(total):
        s = 1.0 + psi * psi / 2.0 + (x - psi) * (x - psi) / 2.0
        theta = s / gammas[i]
        psi = half_x + sqrt(theta / 2.0) * normals[i]
        if i >= nburn:
            thetas[i - nburn] = theta
            psis[i - nburn] = psi
    seed_val = seed if isinstance(seed, int) else 0
    return _empty_to_chain("full", thetas, psis, seed_val, nburn)


def gibbs_tilde(x: float, t: int, seed, burnin=None) -> ChainOutput:
    """Gibbs sampler for the posterior under the product prior pi1(theta)pi0(psi).

    Alternates theta | psi, x ~ InvGamma(3/2, 1 + (x-psi)^2/2) and
    psi | theta, x ~ N(x/(1+theta), theta/(1+theta)).
    """
    if t < 1:
        raise ParameterError(f"chain length must be >= 1, got {t}")
    nburn = _resolve_burnin(t, burnin)
    total = t + nburn
    gen = as_generator(seed, STREAM_TILDE)
    gammas = gen.gamma(1.5, 1.0, total).tolist()
    normals = gen.standard_normal(total).tolist()
    psi = x / 2.0
    thetas = [0.0] * t
    psis = [0.0] * t
    sqrt = math.sqrt
    for i in range(total):
        s = 1.0 + (x - psi) * (x - psi) / 2.0
        theta = s / gammas[i]
        w = 1.0 + theta
        psi = x / w + sqrt(theta / w) * normals[i]
        if i >= nburn:
            thetas[i - nburn] = theta
            psis[i - nburn] = psi
    seed_val = seed if isinstance(seed, int) else 0
    return _empty_to_chain("tilde", thetas, psis, seed_val, nburn)


def sample_null_conditional(x: float, t: int, seed) -> ChainOutput:
    """iid draws from psi | x, theta0: exactly N(x/2, 1/2) at theta0 = 1."""
    if t < 1:
        raise ParameterError(f"chain length must be >= 1, got {t}")
    gen = as_generator(seed, STREAM_NULL)
    psis = x / 2.0 + math.sqrt(0.5) * gen.standard_normal(t)
    seed_val = seed if isinstance(seed, int) else 0
    return _empty_to_chain("null_conditional", None, psis, seed_val, 0)


def toy_problem(x: float) -> EmbeddedTestProblem:
    """Wire the toy model into the estimator interface.

    The tilde Bayes ratio divides the likelihood at theta0 by the closed-form
    theta-mixture of the likelihood; the full Bayes ratio is the posterior
    conditional InvGamma(2, s) ordinate at theta0 over the prior ordinate
    exp(-1), folded into the single expression s^2 exp(1 - s).  Neither reads
    the stored version ordinate.
    """

    def log_prior_null(psi):
        psi = np.asarray(psi, dtype=float)
        return -0.5 * psi * psi - 0.5 * _LOG_TWO_PI

    def log_prior_cond(psi, theta):
        psi = np.asarray(psi, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return -0.5 * psi * psi / theta - 0.5 * (_LOG_TWO_PI + np.log(theta))

    def bayes_ratio_tilde(psi, z=None):
        u = x - np.asarray(psi, dtype=float)
        h = 0.5 * u * u
        return np.exp(1.5 * np.log1p(h) - h) / GAMMA_3_2

    def bayes_ratio_full(psi, z=None):
        psi = np.asarray(psi, dtype=float)
        s = 1.0 + 0.5 * psi * psi + 0.5 * (x - psi) ** 2
        return np.exp(2.0 * np.log(s) + 1.0 - s)

    return EmbeddedTestProblem(
        theta0=THETA0,
        log_prior_null=log_prior_null,
        log_prior_cond=log_prior_cond,
        bayes_ratio_tilde=bayes_ratio_tilde,
        bayes_ratio_full=bayes_ratio_full,
        log_prior_theta0=-1.0,
        sample_full=lambda t, seed, burnin=None: gibbs_full(x, t, seed, burnin),
        sample_tilde=lambda t, seed, burnin=None: gibbs_tilde(x, t, seed, burnin),
        sample_null_conditional=lambda t, seed: sample_null_conditional(x, t, seed),
    )
