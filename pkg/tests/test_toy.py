import math

import numpy as np
import pytest
from scipy import integrate

from sdlab import toy
from sdlab.errors import ParameterError
from sdlab.estimators import batch_means_se, ratio_forward
from sdlab.kernels import inv_gamma_logpdf

import oracles

GAMMA_3_2 = math.gamma(1.5)


class TestClosedForms:
    def test_m0_at_zero(self):
        # 1 / (2 sqrt(pi))
        assert toy.m0_closed(0.0) == pytest.approx(0.28209479177387814, rel=1e-15)

    def test_m1_at_zero(self):
        # Gamma(3/2) / (2 sqrt(pi)) reduces to exactly 1/4
        assert toy.m1_closed(0.0) == pytest.approx(0.25, rel=1e-15)

    @pytest.mark.parametrize("x", [-2.0, 0.5, 3.0])
    def test_ratio_consistency(self, x):
        assert toy.m0_closed(x) / toy.m1_closed(x) == pytest.approx(toy.bf_closed(x), rel=1e-13)

    @pytest.mark.parametrize(
        "x,expected",
        [
            (0.0, 1.1283791670955126),  # 2 / sqrt(pi)
            (1.0, 1.2281359899638933),
            (2.0, 1.1741013053899192),  # 2^{3/2} e^{-1} / Gamma(3/2)
        ],
    )
    def test_bf_values(self, x, expected):
        assert toy.bf_closed(x) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("x", [0.0, 1.0, 2.0])
    def test_closed_forms_against_quadrature(self, x):
        assert toy.m0_closed(x) == pytest.approx(oracles.toy_m0_quad(x), rel=1e-9)
        assert toy.m1_closed(x) == pytest.approx(oracles.toy_m1_quad(x), rel=1e-9)


class TestPosteriorMarginal:
    def test_normalization(self):
        f = lambda th: toy.posterior_marginal_theta(th, 1.0)
        total = integrate.quad(f, 0, 50)[0] + integrate.quad(f, 50, np.inf)[0]
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_value_at_tested_point(self):
        assert toy.posterior_marginal_theta(1.0, 0.0) == pytest.approx(
            0.4151074974205947, rel=1e-13
        )

    @pytest.mark.parametrize("x", [0.0, 1.0, 2.0])
    def test_plugin_identity_exact(self, x):
        ratio = toy.posterior_marginal_theta(1.0, x) / math.exp(-1.0)
        assert ratio == pytest.approx(toy.bf_closed(x), rel=1e-13)

    def test_domain_error(self):
        with pytest.raises(ParameterError):
            toy.posterior_marginal_theta(-0.5, 1.0)

    def test_matches_invgamma_family(self):
        # the printed density is InvGamma(3/2, 1 + x^2/4)
        x, th = 1.3, 0.8
        b = 1 + x * x / 4
        assert toy.posterior_marginal_theta(th, x) == pytest.approx(
            math.exp(inv_gamma_logpdf(th, 1.5, b)), rel=1e-12
        )


class TestGibbsFull:
    def test_theta_marginal_ks(self):
        x = 1.0
        chain = toy.gibbs_full(x, 100_000, 51)
        b = 1 + x * x / 4
        # one-sample KS statistic against the closed-form marginal CDF
        draws = np.sort(chain.theta)
        grid = oracles.invgamma_cdf(draws, 1.5, b)
        ks = np.abs(grid - np.arange(1, draws.size + 1) / draws.size).max()
        assert ks < 0.02

    def test_psi_symmetric_at_zero(self):
        chain = toy.gibbs_full(0.0, 50_000, 52)
        se = batch_means_se(chain.psi)
        assert abs(chain.psi.mean()) < 3 * se

    def test_support(self):
        chain = toy.gibbs_full(2.0, 5_000, 53)
        assert (chain.theta > 0).all() and np.isfinite(chain.psi).all()

    def test_conditionals_normalized(self):
        # theta | psi, x is InvGamma(2, s); psi | theta, x is N(x/2, theta/2)
        x, psi, theta = 1.0, 0.7, 1.4
        s = 1 + psi**2 / 2 + (x - psi) ** 2 / 2
        f = lambda th: math.exp(inv_gamma_logpdf(th, 2.0, s))
        total = integrate.quad(f, 0, 50)[0] + integrate.quad(f, 50, np.inf)[0]
        assert total == pytest.approx(1.0, abs=1e-6)
        g = lambda p: math.exp(-((p - x / 2) ** 2) / theta) / math.sqrt(math.pi * theta)
        assert integrate.quad(g, -30, 30)[0] == pytest.approx(1.0, abs=1e-6)

    def test_invalid_length(self):
        with pytest.raises(ParameterError):
            toy.gibbs_full(0.0, 0, 1)


class TestGibbsTilde:
    # theta has infinite variance under this target (density tail ~ theta^{-5/2}),
    # so conditionals are validated pointwise against the joint and the chain is
    # checked on bounded functionals, where Monte Carlo error actually obeys a CLT

    def test_theta_conditional_matches_joint_quadrature(self):
        # tilde joint restricted to theta at fixed psi, renormalized, must equal
        # the implemented InvGamma(3/2, 1 + (x-psi)^2/2) conditional
        x = 1.0
        for psi in (-0.5, 0.2, 1.4):
            s = 1 + (x - psi) ** 2 / 2

            def joint(th, p=psi):
                return (
                    oracles.toy_prior_theta(th)
                    * oracles.normal_pdf(p)
                    * math.exp(-0.5 * (x - p) ** 2 / th)
                    / math.sqrt(2 * math.pi * th)
                )

            norm = integrate.quad(joint, 0, 50)[0] + integrate.quad(joint, 50, np.inf)[0]
            for th in (0.5, 1.0, 3.0):
                implemented = math.exp(inv_gamma_logpdf(th, 1.5, s))
                assert joint(th) / norm == pytest.approx(implemented, rel=1e-8)

    def test_psi_conditional_matches_joint_quadrature(self):
        x = 1.0
        for theta in (0.6, 2.5):
            def joint(p, th=theta):
                return oracles.normal_pdf(p) * math.exp(
                    -0.5 * (x - p) ** 2 / th
                ) / math.sqrt(2 * math.pi * th)

            norm = integrate.quad(joint, x - 25, x + 25)[0]
            w = 1 + theta
            for p in (-0.3, 0.5, 1.1):
                implemented = math.exp(
                    -0.5 * (p - x / w) ** 2 / (theta / w)
                ) / math.sqrt(2 * math.pi * theta / w)
                assert joint(p) / norm == pytest.approx(implemented, rel=1e-8)

    def test_bounded_functionals_against_2d_quadrature(self):
        x = 1.0
        chain = toy.gibbs_tilde(x, 120_000, 54)

        def expect(g):
            def inner(th):
                val, _ = integrate.quad(
                    lambda p: oracles.normal_pdf(p)
                    * math.exp(-0.5 * (x - p) ** 2 / th)
                    / math.sqrt(2 * math.pi * th),
                    x - 15,
                    x + 15,
                )
                return val * oracles.toy_prior_theta(th) * g(th)

            lo, _ = integrate.quad(inner, 0, 50, limit=200)
            hi, _ = integrate.quad(inner, 50, np.inf, limit=200)
            return lo + hi

        norm = expect(lambda th: 1.0)
        capped_mean = expect(lambda th: min(th, 20.0)) / norm
        inv_mean = expect(lambda th: 1.0 / th) / norm
        p_below = expect(lambda th: float(th <= 1.0)) / norm
        assert np.minimum(chain.theta, 20.0).mean() == pytest.approx(capped_mean, rel=0.01)
        assert (1.0 / chain.theta).mean() == pytest.approx(inv_mean, rel=0.01)
        assert (chain.theta <= 1.0).mean() == pytest.approx(p_below, abs=0.01)

    def test_psi_symmetric_at_zero(self):
        chain = toy.gibbs_tilde(0.0, 50_000, 55)
        assert abs(chain.psi.mean()) < 3 * batch_means_se(chain.psi)

    def test_support(self):
        chain = toy.gibbs_tilde(1.5, 5_000, 56)
        assert (chain.theta > 0).all() and np.isfinite(chain.psi).all()

    def test_invalid_length(self):
        with pytest.raises(ParameterError):
            toy.gibbs_tilde(0.0, -3, 1)


class TestNullConditional:
    def test_moments(self):
        x = 1.6
        chain = toy.sample_null_conditional(x, 100_000, 57)
        n = chain.psi.size
        assert abs(chain.psi.mean() - x / 2) < 3 * math.sqrt(0.5 / n)
        # var of the sample variance of a normal: 2 sigma^4 / (n - 1)
        assert abs(chain.psi.var(ddof=1) - 0.5) < 3 * math.sqrt(2 * 0.25 / (n - 1))

    def test_single_draw(self):
        chain = toy.sample_null_conditional(0.0, 1, 58)
        assert chain.size == 1 and np.isfinite(chain.psi).all()

    def test_invalid_length(self):
        with pytest.raises(ParameterError):
            toy.sample_null_conditional(0.0, 0, 1)


class TestToyProblem:
    def test_tilde_ratio_at_observation(self):
        # at psi = x the likelihood is (2 pi)^{-1/2} and the closed-form
        # denominator is Gamma(3/2) (2 pi)^{-1/2}, so the ratio is 1/Gamma(3/2)
        x = 0.9
        problem = toy.toy_problem(x)
        val = float(problem.bayes_ratio_tilde(np.array([x]), None)[0])
        assert val == pytest.approx(1.0 / GAMMA_3_2, rel=1e-13)

    def test_tilde_ratio_closed_denominator(self):
        # denominator: Gamma(3/2) (2 pi)^{-1/2} (1 + (x-psi)^2/2)^{-3/2}
        x, psi = 1.0, -0.4
        problem = toy.toy_problem(x)
        lik = math.exp(-0.5 * (x - psi) ** 2) / math.sqrt(2 * math.pi)
        denom = GAMMA_3_2 / math.sqrt(2 * math.pi) * (1 + (x - psi) ** 2 / 2) ** -1.5
        val = float(problem.bayes_ratio_tilde(np.array([psi]), None)[0])
        assert val == pytest.approx(lik / denom, rel=1e-12)

    def test_conditional_prior_identity_at_theta0(self):
        problem = toy.toy_problem(0.0)
        at_null = float(problem.log_prior_cond(np.array([0.0]), np.array([1.0]))[0])
        null = float(problem.log_prior_null(np.array([0.0]))[0])
        assert at_null == null == pytest.approx(-0.5 * math.log(2 * math.pi), rel=1e-15)

    def test_stored_version_ordinate(self):
        assert toy.toy_problem(2.0).log_prior_theta0 == -1.0

    def test_full_ratio_quadrature(self):
        # conditional posterior over prior ordinate at theta0, by quadrature
        x, psi = 1.0, 0.3
        problem = toy.toy_problem(x)
        s = 1 + psi**2 / 2 + (x - psi) ** 2 / 2

        def joint(th):
            return math.exp(
                -0.5 * (x - psi) ** 2 / th - 0.5 * psi * psi / th
            ) / (2 * math.pi * th) * th**-2 * math.exp(-1.0 / th)

        num = joint(1.0)
        den = integrate.quad(joint, 0, 50)[0] + integrate.quad(joint, 50, np.inf)[0]
        expected = (num / den) / math.exp(-1.0)
        val = float(problem.bayes_ratio_full(np.array([psi]), None)[0])
        assert val == pytest.approx(expected, rel=1e-9)
        assert val == pytest.approx(s * s * math.exp(1.0 - s), rel=1e-12)

    def test_forward_ratio_is_one_when_priors_match(self):
        # modified problem: theta-independent nuisance prior makes the tilde
        # and full targets coincide, so the forward ratio is exactly one
        import dataclasses

        problem = toy.toy_problem(1.0)
        modified = dataclasses.replace(
            problem, log_prior_cond=lambda psi, theta: problem.log_prior_null(psi)
        )
        chain = toy.gibbs_full(1.0, 2_000, 59)
        assert ratio_forward(chain, modified) == 1.0


class TestToyModelType:
    def test_fixed_tested_value(self):
        model = toy.ToyModel(x=1.0)
        assert model.theta0 == 1.0
        assert model.bayes_factor() == toy.bf_closed(1.0)
        assert model.m0() > 0 and model.m1() > 0
