"""Tests for the closed-form rate approximations.

Ground truth throughout is the adaptive-integration engine in
``crul.oracle`` (independent route over the raw 2-D region integrals),
plus a handful of values frozen from scipy adaptive quadrature runs.
"""

import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, strategies as st

from crul import analytic
from crul.analytic import DERIVED, STATED, AnalyticParams
from crul.channel import ScenarioConfig
from crul.oracle import (
    FULL_QUADRANT,
    RegionSpec,
    ergodic_delta_oracle,
    ergodic_rate_oracle,
    restricted_expectation,
    rsma_case_regions,
    sic_case_regions,
)
from crul.protocols import ProtocolKind

THETA_DEFAULT = 2.0**2.5 - 1.0


def params_at(gamma0_db: float, nodes: int = 100) -> AnalyticParams:
    scenario = ScenarioConfig.from_snr_db(gamma0_db, gamma0_db)
    return AnalyticParams.from_scenario(scenario, nodes=nodes)


def rel_err(value: float, reference: float) -> float:
    return abs(value - reference) / abs(reference)


@pytest.fixture(scope="module")
def p20() -> AnalyticParams:
    return params_at(20.0)


@pytest.fixture(scope="module")
def unit_params() -> AnalyticParams:
    return AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=THETA_DEFAULT)


# ------------------------------------------------------------ parameters


class TestAnalyticParams:
    def test_from_scenario_wiring(self, p20):
        assert p20.lambda_pu == pytest.approx(0.01)
        assert p20.lambda_su == pytest.approx(0.04)
        assert p20.theta == pytest.approx(THETA_DEFAULT)
        assert p20.rule.order == 100
        assert p20.pu_rule is p20.rule

    def test_separate_pu_rule(self):
        scenario = ScenarioConfig.from_snr_db(10.0, 10.0)
        p = AnalyticParams.from_scenario(scenario, nodes=40, pu_nodes=20)
        assert p.rule.order == 40
        assert p.pu_rule.order == 20

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"lambda_pu": 0.0},
            {"lambda_su": -1.0},
            {"theta": 0.0},
            {"bandwidth": 0.0},
            {"lambda_pu": math.inf},
            {"theta": math.nan},
        ],
    )
    def test_rejects_bad_scalars(self, kwargs):
        base = dict(lambda_pu=1.0, lambda_su=1.0, theta=1.0)
        base.update(kwargs)
        with pytest.raises(ValueError):
            AnalyticParams(**base)

    def test_equal_rates_detection(self):
        assert AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=1.0).equal_rates
        assert AnalyticParams(
            lambda_pu=1.0, lambda_su=1.0 + 1e-12, theta=1.0
        ).equal_rates
        assert not AnalyticParams(lambda_pu=1.0, lambda_su=1.01, theta=1.0).equal_rates

    def test_rejects_unknown_variant(self, p20):
        with pytest.raises(ValueError):
            analytic.ratio_density(1.0, p20, variant="fixed")


# ------------------------------------------------------------ ratio density


class TestRatioDensity:
    def test_total_mass_is_protect_probability(self, p20, unit_params):
        # The density is defective: it carries exactly the probability of
        # the event that the primary misses its SINR target.
        for p in (p20, unit_params):
            mass = analytic._adaptive_panels(
                lambda z: analytic.ratio_density(z, p), 0.0, 1.0 / p.lambda_su, 1e-10
            )
            expected = 1.0 - math.exp(-p.lambda_pu * p.theta)
            assert mass == pytest.approx(expected, abs=1e-6)

    def test_matches_cdf_finite_difference(self, unit_params):
        p = unit_params

        def cdf(z: float) -> float:
            value, _ = scipy.integrate.quad(
                lambda y: p.lambda_pu
                * math.exp(-p.lambda_pu * y)
                * (1.0 - math.exp(-p.lambda_su * z * (y + 1.0))),
                0.0,
                p.theta,
                limit=200,
            )
            return value

        step = 1e-5
        derivative = (cdf(1.0 + step) - cdf(1.0 - step)) / (2.0 * step)
        assert analytic.ratio_density(1.0, p) == pytest.approx(derivative, abs=1e-6)

    def test_far_tail_underflows(self):
        p = AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=4.0)
        assert analytic.ratio_density(1e3, p) < 1e-300

    def test_rejects_negative_ratio(self, p20):
        with pytest.raises(ValueError):
            analytic.ratio_density(-0.1, p20)

    def test_array_matches_scalars(self, p20):
        grid = np.array([0.0, 0.3, 1.0, 7.5, 40.0])
        vec = analytic.ratio_density(grid, p20)
        assert vec.shape == grid.shape
        for z, v in zip(grid, vec):
            assert v == analytic.ratio_density(float(z), p20)

    @given(
        z=st.floats(min_value=0.0, max_value=100.0),
        lam_p=st.floats(min_value=1e-3, max_value=10.0),
        lam_s=st.floats(min_value=1e-3, max_value=10.0),
        theta=st.floats(min_value=0.05, max_value=10.0),
    )
    def test_derived_density_nonnegative(self, z, lam_p, lam_s, theta):
        p = AnalyticParams(lambda_pu=lam_p, lambda_su=lam_s, theta=theta)
        assert analytic.ratio_density(z, p) >= -1e-12

    @given(
        z=st.floats(min_value=0.0, max_value=50.0),
        lam=st.floats(min_value=0.01, max_value=5.0),
        theta=st.floats(min_value=0.1, max_value=8.0),
    )
    def test_variants_coincide_for_equal_rates(self, z, lam, theta):
        # The stated variant's slip swaps the two rate parameters, so it
        # is invisible exactly when they coincide.
        p = AnalyticParams(lambda_pu=lam, lambda_su=lam, theta=theta)
        derived = analytic.ratio_density(z, p)
        stated = analytic.ratio_density(z, p, STATED)
        assert stated == pytest.approx(derived, rel=1e-9, abs=1e-300)

    def test_variants_differ_for_unequal_rates(self, p20):
        derived = analytic.ratio_density(1.0, p20)
        stated = analytic.ratio_density(1.0, p20, STATED)
        assert rel_err(stated, derived) > 1e-3


# ------------------------------------------------------------ term: below threshold


class TestBelowThresholdTerm:
    def test_quadrature_matches_adaptive_integral(self, p20):
        quad = analytic.below_threshold_term(p20)
        integral = analytic.below_threshold_term_integral(p20)
        assert rel_err(quad, integral) < 1e-6

    def test_matches_region_oracle(self, p20):
        below = rsma_case_regions(p20.theta)[0]
        reference = restricted_expectation(
            lambda x, y: math.log2(1.0 + y / (1.0 + x)),
            below,
            p20.lambda_pu,
            p20.lambda_su,
        )
        assert rel_err(analytic.below_threshold_term(p20), reference) < 1e-3
        assert rel_err(analytic.below_threshold_term_integral(p20), reference) < 1e-6

    def test_stated_variant_deviates_at_unequal_rates(self, p20):
        # This is the headline symptom of the swapped rate parameters:
        # at the reference geometry the stated value is off by ~57%.
        derived = analytic.below_threshold_term(p20)
        stated = analytic.below_threshold_term(p20, STATED)
        assert rel_err(stated, derived) > 0.01


# ------------------------------------------------------------ term: split band


class TestSplitBandTerm:
    @pytest.mark.parametrize("gamma0_db", [0.0, 20.0])
    def test_matches_region_oracle(self, gamma0_db):
        p = params_at(gamma0_db)
        band = rsma_case_regions(p.theta)[1]
        reference = restricted_expectation(
            lambda x, y: math.log2((1.0 + x + y) / (1.0 + p.theta)),
            band,
            p.lambda_pu,
            p.lambda_su,
        )
        assert rel_err(analytic.split_band_term(p), reference) < 1e-6

    def test_equal_rate_branch_matches_region_oracle(self, unit_params):
        p = unit_params
        band = rsma_case_regions(p.theta)[1]
        reference = restricted_expectation(
            lambda x, y: math.log2((1.0 + x + y) / (1.0 + p.theta)),
            band,
            p.lambda_pu,
            p.lambda_su,
        )
        assert rel_err(analytic.split_band_term(p), reference) < 1e-6

    def test_branch_continuity_at_equal_rates(self):
        # The generic branch divides by the rate difference; approaching
        # coincidence from both sides must bracket the analytic limit.
        equal = AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=THETA_DEFAULT)
        low = AnalyticParams(lambda_pu=1.0, lambda_su=1.0 - 1e-6, theta=THETA_DEFAULT)
        high = AnalyticParams(lambda_pu=1.0, lambda_su=1.0 + 1e-6, theta=THETA_DEFAULT)
        center = analytic.split_band_branch_term(equal)
        bracket = sorted(
            (analytic.split_band_branch_term(low), analytic.split_band_branch_term(high))
        )
        assert bracket[0] <= center <= bracket[1]

    def test_branch_term_vs_band_oracle_remainder(self):
        # The branch piece equals the band oracle minus the branch-free
        # closed-form pieces; checked on the equal-rate path where the
        # stated algebra is most suspect.
        p = AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=1.0)
        band = rsma_case_regions(p.theta)[1]
        reference = restricted_expectation(
            lambda x, y: math.log2((1.0 + x + y) / (1.0 + p.theta)),
            band,
            p.lambda_pu,
            p.lambda_su,
        )
        branch_free = analytic.split_band_term(p) - analytic.split_band_branch_term(p)
        assert analytic.split_band_branch_term(p) == pytest.approx(
            reference - branch_free, abs=1e-4
        )

    def test_branch_term_frozen_value(self):
        # Frozen from the band oracle minus the branch-free pieces
        # (scipy adaptive quadrature, 12 digits).
        p = AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=1.0)
        assert analytic.split_band_branch_term(p) == pytest.approx(
            0.0735981510946, rel=1e-10
        )

    def test_branch_vanishes_with_band(self):
        for lam_su in (1.0, 2.0):
            p = AnalyticParams(lambda_pu=1.0, lambda_su=lam_su, theta=1e-6)
            assert abs(analytic.split_band_branch_term(p)) < 1e-6

    def test_stated_variant_deviates(self, p20):
        band = rsma_case_regions(p20.theta)[1]
        reference = restricted_expectation(
            lambda x, y: math.log2((1.0 + x + y) / (1.0 + p20.theta)),
            band,
            p20.lambda_pu,
            p20.lambda_su,
        )
        assert rel_err(analytic.split_band_term(p20, STATED), reference) > 0.01


# ------------------------------------------------------------ term: clear channel


class TestClearChannelTerm:
    @pytest.mark.parametrize("gamma0_db", [0.0, 20.0])
    def test_matches_region_oracle(self, gamma0_db):
        p = params_at(gamma0_db)
        tolerant = rsma_case_regions(p.theta)[2]
        reference = restricted_expectation(
            lambda x, y: math.log2(1.0 + y),
            tolerant,
            p.lambda_pu,
            p.lambda_su,
        )
        assert rel_err(analytic.clear_channel_term(p), reference) < 1e-6

    def test_stated_variant_is_derived_times_stray_exponential(self, p20):
        # The stated form carries exp(-lambda_pu*theta) twice; everything
        # else is identical, so the ratio pins the slip exactly.
        derived = analytic.clear_channel_term(p20)
        stated = analytic.clear_channel_term(p20, STATED)
        stray = math.exp(-2.0 * p20.lambda_pu * p20.theta)
        assert stated == pytest.approx(derived * stray, rel=1e-12)
        assert rel_err(stated, derived) > 0.01


# ------------------------------------------------------------ totals: rate splitting


class TestRsmaTotal:
    @pytest.mark.parametrize("gamma0_db", [0.0, 10.0, 20.0, 30.0, 40.0])
    def test_matches_full_oracle(self, gamma0_db):
        scenario = ScenarioConfig.from_snr_db(gamma0_db, gamma0_db)
        p = AnalyticParams.from_scenario(scenario)
        reference = ergodic_rate_oracle(ProtocolKind.CR_RSMA, scenario)
        assert rel_err(analytic.ergodic_rsma_analytic(p), reference) < 1e-3

    def test_node_count_converged(self, p20):
        # Order 100 against order 120: the approximation is already
        # settled well past the headline tolerance.
        coarse = analytic.ergodic_rsma_analytic(params_at(20.0, nodes=100))
        fine = analytic.ergodic_rsma_analytic(params_at(20.0, nodes=120))
        assert rel_err(coarse, fine) < 1e-6

    def test_huge_threshold_collapses_to_first_term(self):
        # With an unattainable SINR target the protected event fills the
        # quadrant and the total is the plain interference-limited rate.
        p = AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=1e6)
        reference = restricted_expectation(
            lambda x, y: math.log2(1.0 + y / (1.0 + x)),
            FULL_QUADRANT,
            1.0,
            1.0,
        )
        assert rel_err(analytic.ergodic_rsma_analytic(p), reference) < 1e-3

    def test_vanishing_secondary_snr(self):
        p = AnalyticParams(lambda_pu=1.0, lambda_su=1e6, theta=THETA_DEFAULT)
        assert abs(analytic.ergodic_rsma_analytic(p)) < 1e-6

    def test_stated_total_deviates(self, p20):
        scenario = ScenarioConfig.from_snr_db(20.0, 20.0)
        reference = ergodic_rate_oracle(ProtocolKind.CR_RSMA, scenario)
        stated = analytic.ergodic_rsma_analytic(p20, STATED)
        assert rel_err(stated, reference) > 0.01

    def test_bandwidth_scales_linearly(self):
        base = AnalyticParams(lambda_pu=0.1, lambda_su=0.2, theta=THETA_DEFAULT)
        doubled = AnalyticParams(
            lambda_pu=0.1, lambda_su=0.2, theta=THETA_DEFAULT, bandwidth=2.0
        )
        assert analytic.ergodic_rsma_analytic(doubled) == pytest.approx(
            2.0 * analytic.ergodic_rsma_analytic(base), rel=1e-12
        )


# ------------------------------------------------------------ term: reduced power


class TestReducedPowerKernel:
    def test_frozen_value(self):
        # Frozen from scipy adaptive quadrature of the inner band integral
        # (17 digits; the closed form agreed to 7e-16 when frozen).
        p = AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=4.0)
        assert analytic.reduced_power_kernel(2.0, p) == pytest.approx(
            0.00043763904577598535, rel=1e-12
        )

    def test_matches_inner_integral(self):
        p = AnalyticParams(lambda_pu=1.0, lambda_su=1.0, theta=4.0)
        for x in (0.5, 2.0, 17.0):
            switch = analytic.order_switch_threshold(x, p.theta)
            value, _ = scipy.integrate.quad(
                lambda y: math.log2(y / p.theta) * p.lambda_pu * math.exp(-p.lambda_pu * y),
                switch,
                p.theta * (x + 1.0),
                limit=300,
            )
            reference = value * p.lambda_su * math.exp(-p.lambda_su * x)
            assert analytic.reduced_power_kernel(x, p) == pytest.approx(
                reference, abs=1e-8
            )

    def test_zero_at_origin(self, p20):
        # The band collapses: the switch point equals the band edge.
        assert analytic.reduced_power_kernel(0.0, p20) == 0.0

    def test_rejects_negative_snr(self, p20):
        with pytest.raises(ValueError):
            analytic.reduced_power_kernel(-1.0, p20)

    @given(
        x=st.floats(min_value=0.0, max_value=1e4),
        lam_p=st.floats(min_value=1e-3, max_value=10.0),
        lam_s=st.floats(min_value=1e-3, max_value=10.0),
        theta=st.floats(min_value=0.1, max_value=10.0),
    )
    def test_nonnegative(self, x, lam_p, lam_s, theta):
        # Floor at the cancellation noise of the four-term bracket: for a
        # hair-thin band the true value is O(x^2) but the bracket terms
        # are O(1), so ~1e-13 of signed rounding survives.
        p = AnalyticParams(lambda_pu=lam_p, lambda_su=lam_s, theta=theta)
        assert analytic.reduced_power_kernel(x, p) >= -1e-12

    def test_stated_variant_omits_bandwidth_only(self):
        p1 = AnalyticParams(lambda_pu=0.3, lambda_su=0.7, theta=2.0)
        p3 = AnalyticParams(lambda_pu=0.3, lambda_su=0.7, theta=2.0, bandwidth=3.0)
        for x in (0.5, 4.0, 33.0):
            derived = analytic.reduced_power_kernel(x, p1)
            stated = analytic.reduced_power_kernel(x, p1, STATED)
            assert stated == pytest.approx(derived, rel=1e-12, abs=1e-300)
            assert analytic.reduced_power_kernel(x, p3) == pytest.approx(
                3.0 * stated, rel=1e-12, abs=1e-300
            )


class TestReducedPowerTerm:
    def test_routes_agree_at_moderate_snr(self, p20):
        quad = analytic.reduced_power_term(p20)
        integral = analytic.reduced_power_term_integral(p20)
        reduced = sic_case_regions(p20.theta)[1]
        reference = restricted_expectation(
            lambda x, y: math.log2(x / p20.theta),
            reduced,
            p20.lambda_pu,
            p20.lambda_su,
        )
        assert rel_err(quad, reference) < 1e-3
        assert rel_err(integral, reference) < 1e-6

    def test_fixed_rule_loses_tail_mass_at_high_snr(self):
        # Documented limitation: the largest order-100 node sits near 375,
        # so once 1/lambda_su is thousands the fixed rule sees almost none
        # of the kernel's mass.  The adaptive route stays correct.
        p = params_at(40.0)
        quad = analytic.reduced_power_term(p)
        integral = analytic.reduced_power_term_integral(p)
        reduced = sic_case_regions(p.theta)[1]
        reference = restricted_expectation(
            lambda x, y: math.log2(x / p.theta),
            reduced,
            p.lambda_pu,
            p.lambda_su,
        )
        assert rel_err(integral, reference) < 1e-6
        assert quad < 0.5 * integral


# ------------------------------------------------------------ term: preferred order


class TestOrderSwitchGeometry:
    @pytest.mark.parametrize("theta", [1.0, THETA_DEFAULT])
    @pytest.mark.parametrize("x", [0.0, 2.0, 10.0])
    def test_radicand_identity(self, theta, x):
        # The switch threshold appears in two algebraic dressings; their
        # radicands are identical polynomials.
        assert (theta - 1.0) ** 2 + 4.0 * theta * (1.0 + x) == pytest.approx(
            (theta + 1.0) ** 2 + 4.0 * theta * x, rel=1e-15
        )
        alt = 0.5 * (theta - 1.0 + math.sqrt((theta - 1.0) ** 2 + 4.0 * theta * (1.0 + x)))
        assert analytic.order_switch_threshold(x, theta) == pytest.approx(alt, rel=1e-15)

    @given(
        pu=st.floats(min_value=0.0, max_value=100.0),
        theta=st.floats(min_value=0.1, max_value=10.0),
    )
    def test_threshold_inverts_boundary(self, pu, theta):
        pu_snr = pu + theta  # boundary only meaningful from the threshold up
        level = analytic.preferred_order_boundary(pu_snr, theta)
        assert analytic.order_switch_threshold(level, theta) == pytest.approx(
            pu_snr, rel=1e-12
        )

    def test_threshold_starts_at_protection_level(self):
        assert analytic.order_switch_threshold(0.0, 4.0) == pytest.approx(4.0, rel=1e-15)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            analytic.order_switch_threshold(1.0, 0.0)
        with pytest.raises(ValueError):
            analytic.order_switch_threshold(-1.0, 1.0)
        with pytest.raises(ValueError):
            analytic.preferred_order_boundary(1.0, 0.0)


class TestPreferredOrderTerm:
    def test_routes_agree_at_moderate_snr(self, p20):
        quad = analytic.preferred_order_term(p20)
        integral = analytic.preferred_order_term_integral(p20)
        preferred = sic_case_regions(p20.theta)[2]
        reference = restricted_expectation(
            lambda x, y: math.log2(1.0 + y / (1.0 + x)),
            preferred,
            p20.lambda_pu,
            p20.lambda_su,
        )
        assert rel_err(quad, reference) < 1e-3
        assert rel_err(integral, reference) < 1e-6

    def test_fixed_rule_loses_tail_mass_at_high_snr(self):
        p = params_at(40.0)
        quad = analytic.preferred_order_term(p)
        integral = analytic.preferred_order_term_integral(p)
        preferred = sic_case_regions(p.theta)[2]
        reference = restricted_expectation(
            lambda x, y: math.log2(1.0 + y / (1.0 + x)),
            preferred,
            p.lambda_pu,
            p.lambda_su,
        )
        assert rel_err(integral, reference) < 1e-6
        assert quad < 0.5 * integral


# ------------------------------------------------------------ totals: pure SIC


class TestSicTotal:
    @pytest.mark.parametrize("gamma0_db", [0.0, 10.0, 20.0])
    def test_matches_full_oracle_at_moderate_snr(self, gamma0_db):
        scenario = ScenarioConfig.from_snr_db(gamma0_db, gamma0_db)
        p = AnalyticParams.from_scenario(scenario)
        reference = ergodic_rate_oracle(ProtocolKind.CR_SIC, scenario)
        assert rel_err(analytic.ergodic_sic_analytic(p), reference) < 1e-3

    @pytest.mark.parametrize("gamma0_db", [30.0, 40.0])
    def test_adaptive_routes_cover_high_snr(self, gamma0_db):
        # The all-quadrature assembly degrades here (tail truncation); the
        # adaptive kernel routes recover the oracle value.
        scenario = ScenarioConfig.from_snr_db(gamma0_db, gamma0_db)
        p = AnalyticParams.from_scenario(scenario)
        total = (
            analytic.below_threshold_term_integral(p)
            + analytic.reduced_power_term_integral(p)
            + analytic.preferred_order_term_integral(p)
            + analytic.clear_channel_term(p)
        )
        reference = ergodic_rate_oracle(ProtocolKind.CR_SIC, scenario)
        assert rel_err(total, reference) < 1e-6

    @pytest.mark.parametrize("gamma0_db", [0.0, 10.0, 20.0, 30.0, 40.0])
    def test_rate_splitting_dominates(self, gamma0_db):
        p = params_at(gamma0_db)
        assert (
            analytic.ergodic_rsma_analytic(p) - analytic.ergodic_sic_analytic(p)
            >= -1e-6
        )

    def test_overwhelming_primary_degenerates_to_interference_floor(self):
        # With the primary link essentially off the air the protocols all
        # collapse to the plain interference-limited expectation.
        p = AnalyticParams(lambda_pu=1e3, lambda_su=1.0, theta=THETA_DEFAULT)
        reference = restricted_expectation(
            lambda x, y: math.log2(1.0 + y / (1.0 + x)),
            FULL_QUADRANT,
            1e3,
            1.0,
        )
        assert rel_err(analytic.ergodic_sic_analytic(p), reference) < 1e-2
        assert rel_err(analytic.ergodic_rsma_analytic(p), reference) < 1e-2


# ------------------------------------------------------------ rate difference


class TestDeltaRate:
    def test_matches_band_gap_oracle(self, p20):
        scenario = ScenarioConfig.from_snr_db(20.0, 20.0)
        assert analytic.delta_rate(p20) == pytest.approx(
            ergodic_delta_oracle(scenario), abs=1e-8
        )

    @pytest.mark.parametrize("gamma0_db", [0.0, 20.0])
    def test_equals_difference_of_totals(self, gamma0_db):
        scenario = ScenarioConfig.from_snr_db(gamma0_db, gamma0_db)
        p = AnalyticParams.from_scenario(scenario)
        difference = ergodic_rate_oracle(
            ProtocolKind.CR_RSMA, scenario
        ) - ergodic_rate_oracle(ProtocolKind.CR_SIC, scenario)
        assert analytic.delta_rate(p) == pytest.approx(difference, abs=1e-6)

    @pytest.mark.parametrize("gamma0_db", [0.0, 20.0, 40.0])
    def test_nonnegative(self, gamma0_db):
        assert analytic.delta_rate(params_at(gamma0_db)) >= 0.0

    def test_vanishes_with_threshold(self):
        coarse = analytic.delta_rate(
            AnalyticParams(lambda_pu=1.0, lambda_su=2.0, theta=1e-2)
        )
        fine = analytic.delta_rate(
            AnalyticParams(lambda_pu=1.0, lambda_su=2.0, theta=1e-3)
        )
        assert 0.0 <= fine < coarse
        assert fine < 1e-6

    def test_custom_integrator_is_used(self, p20):
        calls = []

        def fake(integrand, region, lam_p, lam_s, rel_tol=1e-9):
            calls.append(region.description)
            return 0.0

        assert analytic.delta_rate(p20, integrator=fake) == 0.0
        assert len(calls) == 3
