import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reference_values as R
from poitg.data import CountData
from poitg.dist import Params, log_pmf, poig_log_pmf, sample
from poitg.estimate import (
    FitResult,
    confidence_intervals,
    fit_mle,
    information_report,
    log_likelihood,
    numeric_hessian,
    observed_information,
    poig_log_likelihood,
    poig_score,
    score,
)
from poitg.special import DomainError


def fd_gradient(p, data, h=1e-6):
    theta = np.array(p.as_tuple())
    out = np.empty(3)
    for j in range(3):
        e = np.eye(3)[j] * h
        out[j] = (log_likelihood(Params(*(theta + e)), data) - log_likelihood(Params(*(theta - e)), data)) / (2 * h)
    return out


@pytest.fixture(scope="module")
def big_sample():
    return sample(Params(2.0, 0.4, 0.3), 2000, rng=7)


class TestLogLikelihood:
    def test_single_zero(self, ref):
        assert log_likelihood(ref, [0]) == pytest.approx(math.log(R.PMF0), rel=1e-14)
        assert log_likelihood(ref, [0]) == pytest.approx(-1.470004, abs=5e-7)

    def test_pair(self, ref):
        assert log_likelihood(ref, [0, 1]) == pytest.approx(R.LOGLIK_0_1, rel=1e-14)
        assert log_likelihood(ref, [0, 1]) == pytest.approx(-2.639903, abs=5e-7)

    def test_additive_in_copies(self, ref):
        for y in (0, 3, 11):
            assert log_likelihood(ref, [y] * 7) == pytest.approx(7 * log_pmf(y, ref), rel=1e-14)

    @settings(max_examples=30)
    @given(st.lists(st.integers(0, 60), min_size=1, max_size=40))
    def test_equals_pointwise_sum(self, ys):
        p = Params(2.5, 0.45, 0.35)
        assert log_likelihood(p, ys) == pytest.approx(math.fsum(log_pmf(y, p) for y in ys), rel=1e-12)

    @pytest.mark.parametrize("lam, q", [(0.5, 0.2), (2.0, 0.5), (6.0, 0.85)])
    def test_poig_form(self, lam, q):
        data = sample(Params(lam, q, 0.0), 300, rng=3)
        assert poig_log_likelihood(lam, q, data) == pytest.approx(
            log_likelihood(Params(lam, q, 0.0), data), abs=1e-10
        )

    def test_invalid_params(self):
        with pytest.raises(DomainError):
            log_likelihood(Params(1, 0.5, 1.0), [1, 2])


class TestScore:
    def test_matches_finite_differences(self, ref):
        data = [0, 1, 2, 3]
        np.testing.assert_allclose(score(ref, data), fd_gradient(ref, data), rtol=1e-5)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_random_interior_points(self, seed):
        rng = np.random.default_rng(seed)
        data = sample(Params(*rng.uniform([0.5, 0.2, 0.1], [4, 0.8, 0.9])), 200, rng=rng)
        for _ in range(10):
            p = Params(*rng.uniform([0.2, 0.1, 0.05], [5, 0.9, 0.95]))
            s, g = score(p, data), fd_gradient(p, data)
            np.testing.assert_allclose(s, g, rtol=1e-5, atol=1e-5 * np.abs(g).max())

    def test_equal_components_give_zero_alpha_score(self):
        # lam = 1 - q - q**2 makes PoiG(lam, q) and PoiG(lam, q**2) agree at y = 1
        p = Params(0.25, 0.5, 0.5)
        assert poig_log_pmf(1, 0.25, 0.5) == pytest.approx(poig_log_pmf(1, 0.25, 0.25), rel=1e-14)
        assert score(p, [1] * 5)[2] == pytest.approx(0.0, abs=1e-12)

    def test_alpha_boundary_flag(self):
        s = score(Params(1.0, 0.5, 0.0), [0, 1, 2])
        assert s.alpha_boundary
        assert not score(Params(1.0, 0.5, 0.2), [0, 1, 2]).alpha_boundary

    def test_large_lambda_over_q_squared(self):
        p = Params(50.0, 0.05, 0.5)  # lam / q**2 = 2e4
        data = sample(p, 100, rng=1)
        assert np.all(np.isfinite(score(p, data)))
        np.testing.assert_allclose(score(p, data), fd_gradient(p, data), rtol=1e-4, atol=1e-3)

    def test_poig_score(self):
        data = sample(Params(2.0, 0.4, 0.0), 300, rng=4)
        full = score(Params(2.0, 0.4, 0.0), data)
        np.testing.assert_allclose(poig_score(2.0, 0.4, data), full[:2], rtol=1e-9)


class TestInformation:
    def test_doubles_with_duplicated_data(self, ref):
        data = np.array([0, 1, 1, 2, 3, 5, 8])
        one = observed_information(ref, data)
        two = observed_information(ref, np.concatenate([data, data]))
        np.testing.assert_allclose(two, 2 * one, rtol=1e-12)

    def test_symmetric(self, ref):
        info = observed_information(ref, [0, 1, 1, 2, 3, 5, 8])
        np.testing.assert_array_equal(info, info.T)

    def test_positive_definite_at_mle(self, big_sample):
        fit = fit_mle(big_sample)
        report = information_report(observed_information(fit.params, big_sample))
        assert report.positive_definite
        assert report.condition > 1

    def test_matches_loglik_hessian(self, big_sample):
        p = Params(2.0, 0.4, 0.3)
        info = observed_information(p, big_sample)
        np.testing.assert_allclose(info, -numeric_hessian(p, big_sample), rtol=1e-3)

    def test_one_sided_near_alpha_zero(self):
        p = Params(2.0, 0.4, 1e-7)
        info = observed_information(p, sample(p, 500, rng=2))
        assert np.all(np.isfinite(info))


def _fit_with_cov(cov, est=(2.0, 0.4, 0.3)):
    return FitResult(Params(*est), -1.0, 100, "mle", True, 1, covariance=np.asarray(cov))


class TestIntervals:
    def test_cited_arithmetic(self):
        fit = _fit_with_cov(np.diag([0.04, 1e-4, 1e-4]))
        ci = confidence_intervals(fit, 0.95)
        assert (ci["lambda"].lower, ci["lambda"].upper) == pytest.approx((1.608, 2.392), abs=5e-4)
        z = (ci["lambda"].upper - 2.0) / 0.2
        assert z == pytest.approx(1.959964, abs=5e-7)
        assert not ci["lambda"].clipped

    def test_clipping(self):
        fit = _fit_with_cov(np.diag([4.0, 1.0, 1.0]))
        ci = confidence_intervals(fit)
        assert ci["lambda"].lower == 0.0 and ci["lambda"].clipped
        assert (ci["q"].lower, ci["q"].upper) == (0.0, 1.0)
        assert ci["alpha"].lower == 0.0 and ci["alpha"].upper == 1.0

    def test_level_changes_width(self):
        fit = _fit_with_cov(np.diag([0.04, 1e-4, 1e-4]))
        w90 = confidence_intervals(fit, 0.90)["lambda"]
        w99 = confidence_intervals(fit, 0.99)["lambda"]
        assert w90.upper - w90.lower < w99.upper - w99.lower

    def test_missing_information(self):
        fit = _fit_with_cov(None)
        fit = FitResult(fit.params, -1.0, 100, "mle", True, 1)
        with pytest.raises(DomainError, match="profile"):
            confidence_intervals(fit)

    def test_bad_level(self):
        with pytest.raises(DomainError):
            confidence_intervals(_fit_with_cov(np.eye(3)), 1.0)


class TestFitMle:
    def test_recovers_interior_truth(self, big_sample):
        fit = fit_mle(big_sample)
        assert fit.converged
        assert fit.ci is not None
        assert fit.params.lam == pytest.approx(2.0, abs=0.6)
        assert fit.params.q == pytest.approx(0.4, abs=0.15)
        assert "alpha" not in fit.boundary or fit.params.alpha < 1e-6

    def test_stationary_at_interior_optimum(self):
        data = sample(Params(3.0, 0.6, 0.5), 2000, rng=0)
        fit = fit_mle(data, tol=1e-10)
        assert not fit.boundary
        assert np.max(np.abs(score(fit.params, data))) < 1e-4

    @pytest.mark.parametrize("seed", range(4))
    def test_stationary_per_observation(self, seed):
        # a derivative-free search stops near the rounding floor of the
        # objective, so the bound scales with the sample size
        data = sample(Params(1.0, 0.7, 0.8), 2000, rng=seed)
        fit = fit_mle(data, tol=1e-10)
        assert not fit.boundary
        assert np.max(np.abs(score(fit.params, data))) / data.n < 2e-7

    def test_restart_escapes_stall(self):
        # the first simplex collapses early on this sample
        data = sample(Params(3.0, 0.6, 0.5), 2000, rng=2)
        fit = fit_mle(data, tol=1e-10)
        assert np.max(np.abs(score(fit.params, data))) < 1e-3

    def test_permutation_invariant(self, big_sample):
        shuffled = np.random.default_rng(0).permutation(big_sample.counts)
        a, b = fit_mle(big_sample), fit_mle(shuffled)
        assert a.loglik == b.loglik
        assert a.params == b.params

    @pytest.mark.parametrize("init", [Params(0.3, 0.1, 0.9), Params(8.0, 0.9, 0.05), Params(2.0, 0.4, 0.3)])
    def test_never_worse_than_init(self, big_sample, init):
        fit = fit_mle(big_sample, init=init)
        assert fit.loglik >= log_likelihood(init, big_sample)

    def test_multistart_not_worse(self, big_sample):
        single = fit_mle(big_sample, tol=1e-6)
        multi = fit_mle(big_sample, tol=1e-6, multistart=True)
        assert multi.loglik >= single.loglik - 1e-6

    def test_too_few_observations(self):
        with pytest.raises(DomainError):
            fit_mle([1, 2])

    def test_all_zeros_hits_boundary(self):
        fit = fit_mle(np.zeros(50, dtype=int))
        assert not fit.converged or fit.boundary
        assert fit.params.lam < 1e-3
        assert fit.params.q < 1e-2

    def test_non_convergence_is_reported(self, big_sample):
        fit = fit_mle(big_sample, max_iter=5)
        assert not fit.converged
        assert math.isfinite(fit.loglik)

    def test_accepts_count_data(self, big_sample):
        assert isinstance(big_sample, CountData)
        assert fit_mle(big_sample.counts.tolist()).loglik == fit_mle(big_sample).loglik
