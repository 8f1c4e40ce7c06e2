"""Monte Carlo Bayes factors for point-null hypotheses in embedded models."""

from .errors import DataError, NumericError, ParameterError, SdlabError
from .estimators import (
    BayesFactorEstimate,
    ChainOutput,
    CoherenceReport,
    EmbeddedTestProblem,
    batch_means_se,
    coherence_diagnostic,
    estimate_mr,
    estimate_vw,
    rao_blackwell_numerator,
    ratio_forward,
    ratio_reciprocal,
)
from .experiment import CellResult, METHOD_NAMES, rows_to_csv, rows_to_json, run_pima_experiment
from .kernels import (
    SpdMatrix,
    inv_gamma_logpdf,
    mvn_logpdf,
    sample_inv_gamma,
    sample_mvn,
    sample_truncated_normal,
    std_normal_cdf,
)
from .probit import (
    GPriorSpec,
    ProbitData,
    ProbitModel,
    conditional_theta_bayes_ratio,
    gibbs_probit,
    load_pima,
    probit_loglik,
    probit_mle,
    probit_problem,
)
from .evidence import bridge_bf, chib_evidence, is_evidence
from .rng import RngStream
from .toy import ToyModel, bf_closed, gibbs_full, gibbs_tilde, m0_closed, m1_closed, toy_problem

__version__ = "0.1.0"

__all__ = [
    "BayesFactorEstimate",
    "CellResult",
    "ChainOutput",
    "CoherenceReport",
    "DataError",
    "EmbeddedTestProblem",
    "GPriorSpec",
    "METHOD_NAMES",
    "NumericError",
    "ParameterError",
    "ProbitData",
    "ProbitModel",
    "RngStream",
    "SdlabError",
    "SpdMatrix",
    "ToyModel",
    "batch_means_se",
    "bf_closed",
    "bridge_bf",
    "chib_evidence",
    "coherence_diagnostic",
    "conditional_theta_bayes_ratio",
    "estimate_mr",
    "estimate_vw",
    "gibbs_full",
    "gibbs_probit",
    "gibbs_tilde",
    "inv_gamma_logpdf",
    "is_evidence",
    "load_pima",
    "m0_closed",
    "m1_closed",
    "mvn_logpdf",
    "probit_loglik",
    "probit_mle",
    "probit_problem",
    "rao_blackwell_numerator",
    "ratio_forward",
    "ratio_reciprocal",
    "rows_to_csv",
    "rows_to_json",
    "run_pima_experiment",
    "sample_inv_gamma",
    "sample_mvn",
    "sample_truncated_normal",
    "std_normal_cdf",
    "toy_problem",
]
