"""Monte Carlo engine checks: exact stub ensembles, reproducibility, error
calibration, and closed-form expectations for the Gaussian ensemble."""

import numpy as np
import pytest

from hyperzero import (
    BallFamily,
    InsufficientHits,
    InvalidBallFamily,
    PolicyInfeasible,
    TrialFailure,
    clt_statistic_sample,
    correlation_limit,
    independence_experiment,
    intensity_profile,
    joint_hit_probability,
)
from hyperzero.coeffs import CoefficientLaw

GAUSSIAN = CoefficientLaw.gaussian()


class _FixedPolynomial:
    """Deterministic 'law' handing every trial the same coefficients.

    With the randomness removed the hit probability must come out
    exactly 0 or 1, which pins the whole contour pipeline.
    """

    def __init__(self, coeffs, tag="fixed"):
        self._coeffs = np.asarray(coeffs, dtype=complex)
        self.tag = tag

    def sample(self, count, generator):
        out = np.zeros(count, dtype=complex)
        take = min(count, self._coeffs.size)
        out[:take] = self._coeffs[:take]
        return out


class TestBallFamily:
    def test_valid_family_and_size(self):
        fam = BallFamily((0.0, 0.5), 0.1)
        assert fam.n == 2

    def test_rejects_empty(self):
        with pytest.raises(InvalidBallFamily):
            BallFamily((), 0.1)

    def test_rejects_nonpositive_epsilon(self):
        with pytest.raises(InvalidBallFamily):
            BallFamily((0.0,), 0.0)
        with pytest.raises(InvalidBallFamily):
            BallFamily((0.0,), -0.1)

    def test_rejects_overlapping_balls(self):
        # centers 0.15 apart with epsilon 0.1 overlap
        with pytest.raises(InvalidBallFamily):
            BallFamily((0.0, 0.15), 0.1)

    def test_rejects_ball_leaving_disk(self):
        with pytest.raises(InvalidBallFamily):
            BallFamily((0.95,), 0.1)


class TestExactStubs:
    def test_zero_inside_every_trial_gives_probability_one(self):
        # f(z) = z - 0.05 has its only zero inside ball(0, 0.1)
        law = _FixedPolynomial([-0.05, 1.0])
        est = joint_hit_probability(law, None, BallFamily((0.0,), 0.1), 200, 0)
        assert est.probability == 1.0
        assert est.std_error == 0.0
        assert est.hits == est.trials == 200

    def test_no_zero_gives_probability_zero(self):
        law = _FixedPolynomial([1.0, 0.25])
        est = joint_hit_probability(law, None, BallFamily((0.0,), 0.1), 200, 0)
        assert est.probability == 0.0
        assert est.hits == 0

    def test_identically_zero_function_aborts_with_provenance(self):
        law = _FixedPolynomial([0.0], tag="null")
        with pytest.raises(TrialFailure) as info:
            joint_hit_probability(law, None, BallFamily((0.0,), 0.1), 5, 0)
        assert info.value.trial == 0
        assert info.value.stream_index is not None


class TestReproducibility:
    def test_same_seed_is_bitwise_identical(self):
        fam = BallFamily((0.2,), 0.1)
        a = joint_hit_probability(GAUSSIAN, 0.3, fam, 1500, 77)
        b = joint_hit_probability(GAUSSIAN, 0.3, fam, 1500, 77)
        assert a.hits == b.hits
        assert a.probability == b.probability

    def test_thread_count_does_not_change_the_answer(self):
        # 3000 trials spans many 256-trial chunks
        fam = BallFamily((0.0,), 0.1)
        a = joint_hit_probability(GAUSSIAN, None, fam, 3000, 5, threads=1)
        b = joint_hit_probability(GAUSSIAN, None, fam, 3000, 5, threads=4)
        assert a.hits == b.hits
        assert a.probability == b.probability

    def test_basepoint_zero_matches_raw_series(self):
        # phi(0, z) = z, so the pushforward at u=0 must reproduce the
        # u=None contours stream for stream, trial for trial
        fam = BallFamily((0.0,), 0.1)
        a = joint_hit_probability(GAUSSIAN, None, fam, 3000, 5)
        b = joint_hit_probability(GAUSSIAN, 0.0, fam, 3000, 5)
        assert a.hits == b.hits

    def test_estimate_echoes_provenance(self):
        fam = BallFamily((0.0,), 0.3)
        est = joint_hit_probability(GAUSSIAN, None, fam, 400, 9, cell=3)
        assert est.cell == 3
        assert est.experiment == "joint-hit"
        assert est.master_seed == 9
        assert est.law_tag == GAUSSIAN.tag
        assert est.epsilon == 0.3
        assert est.trials == 400


class TestErrorCalibration:
    def test_reported_binomial_error_matches_observed_scatter(self):
        # 40 independent repetitions of the same cell: the normalized
        # deviations should average to unit chi-square, and mean z^2
        # outside [0.45, 1.85] is a <0.1% event for 39 dof
        fam = BallFamily((0.0,), 0.3)
        reps = [
            joint_hit_probability(GAUSSIAN, None, fam, 250, 19, cell=k)
            for k in range(40)
        ]
        pooled = sum(e.hits for e in reps) / sum(e.trials for e in reps)
        z = np.array([(e.probability - pooled) / e.std_error for e in reps])
        assert 0.45 < np.mean(z**2) < 1.85


class TestFeasibility:
    def test_untruncatable_geometry_is_refused(self):
        # the image of this ball under phi(0.999999, .) reaches 0.99999,
        # putting the required degree past the practical cap
        with pytest.raises(PolicyInfeasible):
            joint_hit_probability(GAUSSIAN, 0.999999, BallFamily((0.9,), 0.05), 10, 1)

    def test_jitter_margin_past_the_boundary_is_refused(self):
        # |c| + eps = 0.9999 is a valid family, but the engine's 1%
        # fallback jitter would push the contour outside the disk
        with pytest.raises(PolicyInfeasible):
            joint_hit_probability(GAUSSIAN, None, BallFamily((0.93,), 0.0699), 10, 1)

    def test_nonpositive_trials_rejected(self):
        with pytest.raises(ValueError):
            joint_hit_probability(GAUSSIAN, None, BallFamily((0.0,), 0.1), 0, 1)

    def test_too_few_hits_for_extrapolation(self):
        with pytest.raises(InsufficientHits):
            correlation_limit(GAUSSIAN, (0.0,), (0.05,), (0.0,), 200, 1)


class TestGaussianClosedForms:
    def test_single_ball_probability_matches_expected_count(self):
        # E[#zeros in |z| < eps] = int_0^eps 2r (1-r^2)^-2 dr = eps^2/(1-eps^2);
        # P(hit) differs from it by at most E[N(N-1)]/2 <= (EN)^2/2 ~ 5e-5
        expected = 0.01 / 0.99
        est = joint_hit_probability(GAUSSIAN, None, BallFamily((0.0,), 0.1), 20000, 42)
        assert abs(est.probability - expected) <= 4.0 * est.std_error + 6e-5

    def test_two_ball_scaled_probability_matches_pair_determinant(self):
        # eps^-4 P(both balls hit) -> det [K(ci, cj)] with K = (1-z w*)^-2:
        # at centers +-0.4 the 2x2 determinant is
        # (1-0.16)^-4 - (1+0.16)^-4 = 1.45625986596689 (30-digit arithmetic)
        est = joint_hit_probability(
            GAUSSIAN, 0.0, BallFamily((-0.4, 0.4), 0.1), 150_000, 42
        )
        scaled, scaled_se = est.scaled()
        assert abs(scaled - 1.45625986596689) <= 4.0 * scaled_se + 0.05

    def test_extrapolated_intensity_at_offcenter_ball(self):
        # eps^-2 P(hit ball(0.5, eps)) -> K(0.5, 0.5) = (1 - 0.25)^-2 = 16/9
        report = correlation_limit(GAUSSIAN, (0.0,), (0.2, 0.1), (0.5,), 40_000, 7)
        assert abs(report.extrapolated - 16.0 / 9.0) <= 4.0 * report.combined_error

    def test_radial_profile_matches_hyperbolic_area(self):
        # per annulus, E[count] = (1-r_out^2)^-1 - (1-r_in^2)^-1
        profile = intensity_profile(GAUSSIAN, None, 0.5, 4, 15_000, 11)
        for a in profile.annuli:
            expected = 1.0 / (1.0 - a.r_outer**2) - 1.0 / (1.0 - a.r_inner**2)
            assert abs(a.mean_count - expected) <= 4.0 * a.count_se + 1e-3
        assert abs(profile.total_mean - 1.0 / 3.0) <= 4.0 * profile.total_se + 1e-3


class TestCltStatistic:
    POINTS = (0.2, -0.3j)
    WEIGHTS = (1.0, 0.5)

    def test_variance_matches_direct_kernel_sum(self):
        # sigma^2 = 0.5 Re sum_ij w_i conj(w_j) sum_k (z_i conj(z_j))^k,
        # summed here directly instead of through the covariance helper
        sigma_sq = 0.0
        for zi, wi in zip(self.POINTS, self.WEIGHTS):
            for zj, wj in zip(self.POINTS, self.WEIGHTS):
                prod = complex(zi) * np.conj(complex(zj))
                series = sum(prod**k for k in range(200))
                sigma_sq += 0.5 * (wi * np.conj(wj) * series).real
        summary = clt_statistic_sample(GAUSSIAN, 0.0, self.POINTS, self.WEIGHTS, 3000, 13)
        assert summary.sigma_sq == pytest.approx(sigma_sq, rel=1e-12)
        assert summary.sigma_sq == pytest.approx(1.15640242745165, rel=1e-12)

    def test_gaussian_case_is_close_to_normal(self):
        summary = clt_statistic_sample(GAUSSIAN, 0.0, self.POINTS, self.WEIGHTS, 3000, 13)
        assert not summary.degenerate
        # true-normal KS distance at n=3000 concentrates near 0.016
        assert summary.ks_distance < 0.05
        assert summary.empirical_variance == pytest.approx(summary.sigma_sq, rel=0.2)

    def test_zero_weights_are_degenerate_not_an_error(self):
        summary = clt_statistic_sample(GAUSSIAN, 0.0, self.POINTS, (0.0, 0.0), 1500, 13)
        assert summary.degenerate
        assert summary.ks_distance is None

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            clt_statistic_sample(GAUSSIAN, 0.0, self.POINTS, self.WEIGHTS, 999, 13)


class TestIndependence:
    def test_equal_basepoints_are_perfectly_coupled(self):
        report = independence_experiment(GAUSSIAN, 0.4, 0.4, 0.0, 0.2, 2000, 23)
        assert report.identical
        assert report.indicator_correlation == 1.0

    def test_far_basepoints_decouple(self):
        report = independence_experiment(GAUSSIAN, 0.9, -0.9, 0.0, 0.2, 10_000, 23)
        assert not report.identical
        # indicator correlation compatible with zero, field covariance
        # compatible with the closed-form cross kernel
        assert abs(report.indicator_correlation) <= 4.0 * report.indicator_correlation_se
        assert report.field_deviation_sigmas <= 4.0
