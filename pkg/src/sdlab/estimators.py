"""Model-agnostic Bayes-factor estimators for point nulls in embedded models.

Two estimators are provided.  Both factor the Bayes factor B01 into a
Rao-Blackwellized conditional-density average times a prior-ratio average,
but they draw the two averages from different chains:

* MR: the conditional average runs over the modified posterior whose prior
  makes the tested parameter and the nuisance independent ("tilde" target),
  and the ratio average runs over the ordinary full posterior.
* VW: the conditional average runs over the full posterior and the ratio
  average over the posterior of the nuisance with the tested parameter
  pinned at its null value.

Every conditional density enters through a problem-supplied closed-form
Bayes ratio, never through a free-standing density ordinate, so the results
cannot depend on which version of a conditional density a user happens to
store.  The two ratio estimators (forward and reciprocal) target the same
normalizing-constant ratio from different chains; comparing them flags
infinite-variance behaviour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericError, ParameterError

CHAIN_TARGETS = ("full", "tilde", "null_conditional")

# exp() of a log-ratio beyond this overflows float64
_LOG_OVERFLOW = 700.0


@dataclass
class ChainOutput:
    """Ordered post-burn-in draws from one of the three posterior targets.

    ``psi`` has shape (T,) or (T, p); p = 0 is allowed (no nuisance).
    ``theta`` is None for the null-conditional target, where the tested
    parameter is pinned.  ``z`` holds latent-variable draws when the model
    has them.
    """

    target: str
    psi: np.ndarray
    theta: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    seed: int = 0
    burnin: int = 0

    def __post_init__(self):
        if self.target not in CHAIN_TARGETS:
            raise ParameterError(f"unknown chain target {self.target!r}")
        self.psi = np.asarray(self.psi, dtype=float)
        if self.theta is not None:
            self.theta = np.asarray(self.theta, dtype=float)

    @property
    def size(self) -> int:
        return self.psi.shape[0]


@dataclass
class EmbeddedTestProblem:
    """Everything the estimators need to know about one embedded test.

    The two ``bayes_ratio_*`` evaluators are the constrained conditional
    Bayes ratios at the tested value: single closed-form quantities, not
    quotients of separately stored densities.  ``log_prior_theta0`` stores a
    chosen version of the prior ordinate for reference only; the estimators
    never read it.

    All evaluators are vectorized over draws: ``psi`` of shape (T,) or
    (T, p), optional ``z`` of shape (T, n), returning shape (T,).
    """

    theta0: float
    log_prior_null: Callable[[np.ndarray], np.ndarray]
    log_prior_cond: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bayes_ratio_tilde: Callable[[np.ndarray, Optional[np.ndarray]], np.ndarray]
    bayes_ratio_full: Callable[[np.ndarray, Optional[np.ndarray]], np.ndarray]
    log_prior_theta0: float = 0.0
    sample_full: Optional[Callable[..., ChainOutput]] = None
    sample_tilde: Optional[Callable[..., ChainOutput]] = None
    sample_null_conditional: Optional[Callable[..., ChainOutput]] = None


@dataclass
class BayesFactorEstimate:
    """One Bayes-factor estimate with its two component terms.

    ``estimate`` is exactly ``rao_blackwell_term * ratio_term``; the standard
    errors are non-overlapping batch-means errors of each term's chain
    average.
    """

    method: str
    rao_blackwell_term: float
    ratio_term: float
    se_rao_blackwell: float
    se_ratio: float
    estimate: float = field(init=False)
    log_estimate: float = field(init=False)

    def __post_init__(self):
        self.estimate = self.rao_blackwell_term * self.ratio_term
        if not self.estimate > 0:
            raise NumericError(f"non-positive Bayes factor estimate {self.estimate}")
        self.log_estimate = math.log(self.estimate)

    @property
    def se_estimate(self) -> float:
        """Delta-method standard error of the product of the two terms."""
        rel = math.hypot(
            self.se_rao_blackwell / self.rao_blackwell_term,
            self.se_ratio / self.ratio_term,
        )
        return abs(self.estimate) * rel


@dataclass(frozen=True)
class CoherenceReport:
    statistic: float
    flag: str  # 'coherent' | 'suspect' | 'incoherent'
    forward: float
    reciprocal: float


def batch_means_se(x: np.ndarray) -> float:
    """Monte Carlo standard error of mean(x) by non-overlapping batch means.

    Uses floor(sqrt(T)) batches so the error estimate is consistent for
    Markov-dependent draws.  Returns 0.0 when fewer than two batches fit.
    """
    x = np.asarray(x, dtype=float)
    t = x.size
    a = int(math.isqrt(t))
    if a < 2:
        return 0.0
    b = t // a
    means = x[: a * b].reshape(a, b).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(a))


def _require(chain: ChainOutput, target: str, op: str) -> None:
    if chain.target != target:
        raise ParameterError(f"{op} needs a {target!r} chain, got {chain.target!r}")
    if chain.size < 1:
        raise ParameterError(f"{op}: empty chain")


def _check_finite(values: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise NumericError(f"{what} is non-finite at draw {idx}")
    return values


def _rb_tilde_sequence(chain: ChainOutput, problem: EmbeddedTestProblem) -> np.ndarray:
    vals = np.asarray(problem.bayes_ratio_tilde(chain.psi, chain.z), dtype=float)
    return _check_finite(vals, "tilde conditional Bayes ratio")


def _rb_full_sequence(chain: ChainOutput, problem: EmbeddedTestProblem) -> np.ndarray:
    vals = np.asarray(problem.bayes_ratio_full(chain.psi, chain.z), dtype=float)
    return _check_finite(vals, "full conditional Bayes ratio")


def _forward_sequence(chain: ChainOutput, problem: EmbeddedTestProblem) -> np.ndarray:
    logr = np.asarray(problem.log_prior_null(chain.psi), dtype=float) - np.asarray(
        problem.log_prior_cond(chain.psi, chain.theta), dtype=float
    )
    top = float(logr.max())
    if top > _LOG_OVERFLOW:
        raise NumericError(f"prior ratio overflows exp(); max log-ratio {top:.3g}")
    return np.exp(logr)


def _null_ratio_sequence(chain: ChainOutput, problem: EmbeddedTestProblem) -> np.ndarray:
    theta0 = np.full(chain.size, problem.theta0)
    logr = np.asarray(problem.log_prior_null(chain.psi), dtype=float) - np.asarray(
        problem.log_prior_cond(chain.psi, theta0), dtype=float
    )
    top = float(logr.max())
    if top > _LOG_OVERFLOW:
        raise NumericError(f"prior ratio overflows exp(); max log-ratio {top:.3g}")
    return np.exp(logr)


def rao_blackwell_numerator(chain: ChainOutput, problem: EmbeddedTestProblem) -> float:
    """Average of the constrained conditional Bayes ratio over a tilde chain.

    Converges to the ratio of the tilde-posterior ordinate at the tested
    value over the prior ordinate, with the uniquely defined version.
    """
    _require(chain, "tilde", "rao_blackwell_numerator")
    return float(_rb_tilde_sequence(chain, problem).mean())


def ratio_forward(chain: ChainOutput, problem: EmbeddedTestProblem) -> float:
    """Unbiased estimate of the tilde-to-full marginal likelihood ratio.

    Averages pi0(psi)/pi1(psi|theta) over full-posterior draws, computed via
    exp of log-density differences.
    """
    _require(chain, "full", "ratio_forward")
    return float(_forward_sequence(chain, problem).mean())


def ratio_reciprocal(chain: ChainOutput, problem: EmbeddedTestProblem) -> float:
    """Convergent (if biased) estimate of the same ratio from the tilde chain.

    Harmonic form: T over the sum of pi1(psi|theta)/pi0(psi) at tilde draws.
    """
    value, _ = ratio_reciprocal_with_se(chain, problem)
    return value


def ratio_reciprocal_with_se(chain: ChainOutput, problem: EmbeddedTestProblem) -> tuple[float, float]:
    """Reciprocal ratio estimate plus a delta-method batch-means error."""
    _require(chain, "tilde", "ratio_reciprocal")
    logr = np.asarray(problem.log_prior_cond(chain.psi, chain.theta), dtype=float) - np.asarray(
        problem.log_prior_null(chain.psi), dtype=float
    )
    top = float(logr.max())
    if top > _LOG_OVERFLOW:
        raise NumericError(f"prior ratio overflows exp(); max log-ratio {top:.3g}")
    seq = np.exp(logr)
    denom = float(seq.mean())
    if denom <= 0.0:
        raise NumericError("reciprocal ratio denominator is zero")
    return 1.0 / denom, batch_means_se(seq) / denom**2


def estimate_mr(
    chain_tilde: ChainOutput, chain_full: ChainOutput, problem: EmbeddedTestProblem
) -> BayesFactorEstimate:
    """MR estimator: tilde-chain conditional average times forward ratio.

    The stored version ordinate ``log_prior_theta0`` is never read.
    """
    _require(chain_tilde, "tilde", "estimate_mr")
    _require(chain_full, "full", "estimate_mr")
    rb = _rb_tilde_sequence(chain_tilde, problem)
    ratio = _forward_sequence(chain_full, problem)
    return BayesFactorEstimate(
        method="MR",
        rao_blackwell_term=float(rb.mean()),
        ratio_term=float(ratio.mean()),
        se_rao_blackwell=batch_means_se(rb),
        se_ratio=batch_means_se(ratio),
    )


def estimate_vw(
    chain_full: ChainOutput, chain_null: ChainOutput, problem: EmbeddedTestProblem
) -> BayesFactorEstimate:
    """VW estimator: full-chain conditional average times null-conditional ratio."""
    _require(chain_full, "full", "estimate_vw")
    _require(chain_null, "null_conditional", "estimate_vw")
    rb = _rb_full_sequence(chain_full, problem)
    ratio = _null_ratio_sequence(chain_null, problem)
    return BayesFactorEstimate(
        method="VW",
        rao_blackwell_term=float(rb.mean()),
        ratio_term=float(ratio.mean()),
        se_rao_blackwell=batch_means_se(rb),
        se_ratio=batch_means_se(ratio),
    )


def coherence_diagnostic(
    r_forward: float, se_forward: float, r_reciprocal: float, se_reciprocal: float
) -> CoherenceReport:
    """Compare the two ratio estimates on a combined-standard-error scale.

    A large discrepancy between the forward and reciprocal routes to the same
    ratio is evidence that one of them has infinite variance.
    """
    denom = math.hypot(se_forward, se_reciprocal)
    diff = abs(r_forward - r_reciprocal)
    if denom == 0.0:
        stat = 0.0 if diff == 0.0 else math.inf
    else:
        stat = diff / denom
    if stat < 3.0:
        flag = "coherent"
    elif stat <= 6.0:
        flag = "suspect"
    else:
        flag = "incoherent"
    return CoherenceReport(statistic=stat, flag=flag, forward=r_forward, reciprocal=r_reciprocal)
