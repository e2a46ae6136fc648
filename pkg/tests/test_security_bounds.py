import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bb84limits.link_model import ChannelParams, DetectorParams, ErrorModel, link_budget
from bb84limits.photon_statistics import HeraldedPDC, SinglePhoton, WeakCoherent, poisson_distribution
from bb84limits.security_bounds import (
    ERROR_THRESHOLD,
    check_all,
    combined_condition,
    exact_min_transmission,
    honest_detector_wcp_bound,
    max_secure_distance,
    min_transmission,
    min_transmission_single_photon,
    necessary_condition_error,
    necessary_condition_multiphoton,
    numeric_minimize,
    optimal_pdc_chi,
    optimal_wcp_mu,
    pdc_transmission_bound,
    wcp_transmission_bound,
)

from oracles import bisect_threshold, grid_argmin, poisson_series

GE_APD = DetectorParams(0.11, 1e-5)


class TestCriteria:
    def test_error_secure(self):
        assert necessary_condition_error(1e-3, 0.0).secure

    def test_error_boundary_is_insecure(self):
        v = necessary_condition_error(1e-3, 2.5e-4)
        assert not v.secure and v.margin == 0.0

    def test_error_single_photon_boundary(self):
        d = 1e-5
        v = necessary_condition_error(2 * d, d / 2)
        assert not v.secure and v.margin == 0.0

    def test_multiphoton(self):
        assert necessary_condition_multiphoton(1.0, 0.0).secure
        assert not necessary_condition_multiphoton(3.47e-3, 4.68e-3).secure
        v = necessary_condition_multiphoton(0.01, 0.01)
        assert not v.secure and v.margin == 0.0

    def test_multiphoton_wcp_zero_distance(self):
        lb = link_budget(WeakCoherent(0.1), ChannelParams(0.38, 5.0, 0.0), GE_APD)
        p_multi = poisson_distribution(0.1).p_multi
        assert not necessary_condition_multiphoton(lb.p_sig, p_multi).secure

    def test_combined(self):
        v = combined_condition(1e-3, 0.0, 0.0)
        assert v.secure and v.margin == pytest.approx(1e-3, rel=1e-15)
        assert not combined_condition(1e-3, 0.0, 1e-3).secure

    def test_combined_at_wcp_optimum(self):
        mu, f, det = 4.5e-3, 0.0407, GE_APD
        p_sig = -math.expm1(-f * det.eta * mu)
        p_exp = p_sig + det.dark
        _, _, p_multi = poisson_series(mu)
        v = combined_condition(p_exp, det.dark / 2, p_multi)
        assert abs(v.margin) <= 0.05 * p_exp

    def test_threshold_is_configurable(self):
        assert ERROR_THRESHOLD == 0.25
        assert not necessary_condition_error(1e-3, 1.5e-4, threshold=0.1).secure
        assert necessary_condition_error(1e-3, 1.5e-4).secure

    @settings(max_examples=300)
    @given(
        mu=st.floats(1e-4, 1.0),
        length=st.floats(0.0, 150.0),
        eta=st.floats(0.01, 1.0),
        dark=st.floats(0.0, 1e-3),
        pe=st.floats(0.0, 0.3),
        mode=st.sampled_from(["paper_approx", "exact"]),
    )
    def test_combined_implies_both(self, mu, length, eta, dark, pe, mode):
        source = WeakCoherent(mu)
        lb = link_budget(source, ChannelParams(0.38, 5.0, length), DetectorParams(eta, dark), ErrorModel(pe), mode)
        p_multi = poisson_distribution(mu, 40).p_multi
        v = check_all(lb.p_sig, lb.p_exp, lb.e, p_multi)
        if v["combined"].secure:
            assert v["error_only"].secure
            assert v["multiphoton_only"].secure

    @settings(max_examples=200)
    @given(lhs=st.floats(0, 1), rhs=st.floats(0, 1))
    def test_secure_iff_positive_margin(self, lhs, rhs):
        for v in (necessary_condition_multiphoton(rhs, lhs), combined_condition(rhs, lhs / 4, 0.0)):
            assert v.secure == (v.margin > 0)


class TestSinglePhoton:
    def test_perfect_efficiency(self):
        assert min_transmission_single_photon(DetectorParams(1.0, 1e-5)).f_min == 1e-5

    def test_reference_detector(self):
        assert min_transmission_single_photon(GE_APD).f_min == pytest.approx(9.091e-5, rel=1e-4)

    def test_no_dark_counts(self):
        assert min_transmission_single_photon(DetectorParams(0.11, 0.0)).f_min == 0.0
        assert min_transmission_single_photon(DetectorParams(0.11, 0.0), "numeric_exact").f_min == 0.0

    def test_numeric(self):
        # exact coincidence term: F eta (1 - d) > d
        f = min_transmission_single_photon(GE_APD, "numeric_exact").f_min
        assert f == pytest.approx(1e-5 / (0.11 * (1 - 1e-5)), rel=1e-8)


class TestWcp:
    def test_mu_0p1_closed_form(self):
        b = wcp_transmission_bound(0.1, GE_APD)
        assert b.f_min == pytest.approx(0.4554, abs=1e-4)
        assert b.f_min > 10**-0.5

    def test_optimum_value(self):
        # two-digit headline value at the rounded optimum
        assert wcp_transmission_bound(4.5e-3, GE_APD).f_min == pytest.approx(0.041, abs=5e-4)

    def test_numeric_agrees_at_optimum(self):
        closed = wcp_transmission_bound(4.5e-3, GE_APD).f_min
        numeric = wcp_transmission_bound(4.5e-3, GE_APD, "numeric_exact").f_min
        assert numeric == pytest.approx(closed, rel=0.01)

    def test_numeric_matches_independent_bisection(self):
        mu, det = 4.5e-3, GE_APD
        _, _, p_multi = poisson_series(mu)

        def margin(f):
            p_sig = -math.expm1(-f * det.eta * mu)
            p_exp = 1 - (1 - p_sig) * (1 - det.dark)
            return p_exp - p_multi - 4 * det.dark / 2

        expected = bisect_threshold(margin, 1e-12, 1.0)
        assert wcp_transmission_bound(mu, det, "numeric_exact").f_min == pytest.approx(expected, rel=1e-8)

    def test_closed_form_refuses_large_mu(self):
        with pytest.raises(ValueError, match="numeric_exact"):
            wcp_transmission_bound(0.3, GE_APD)
        assert not wcp_transmission_bound(0.9, GE_APD, "numeric_exact").attainable

    def test_optimum(self):
        b = optimal_wcp_mu(GE_APD)
        assert b.optimal_intensity == pytest.approx(4.47e-3, rel=1e-3)
        assert b.f_min == pytest.approx(0.04066, rel=1e-3)

    def test_optimum_perfect_efficiency(self):
        assert optimal_wcp_mu(DetectorParams(1.0, 1e-5)).f_min == pytest.approx(4.47e-3, rel=1e-3)

    def test_optimum_is_stationary(self):
        det = GE_APD
        mu, _ = numeric_minimize(lambda m: wcp_transmission_bound(m, det).f_min, (1e-4, 0.25))
        assert mu == pytest.approx(optimal_wcp_mu(det).optimal_intensity, rel=1e-6)

    def test_optimum_needs_dark_counts(self):
        with pytest.raises(ValueError, match="dark"):
            optimal_wcp_mu(DetectorParams(0.11, 0.0))

    def test_numeric_optimum(self):
        closed = optimal_wcp_mu(GE_APD)
        numeric = optimal_wcp_mu(GE_APD, "numeric_exact")
        assert numeric.f_min == pytest.approx(closed.f_min, rel=0.02)
        assert numeric.optimal_intensity == pytest.approx(closed.optimal_intensity, rel=0.02)

    @settings(max_examples=100, deadline=None)
    @given(mu=st.floats(1e-3, 1e-2), eta=st.floats(0.05, 1.0), dark=st.floats(1e-7, 1e-5))
    def test_exact_vs_closed_form(self, mu, eta, dark):
        det = DetectorParams(eta, dark)
        closed = wcp_transmission_bound(mu, det)
        if closed.f_min > 0.9:
            return
        numeric = wcp_transmission_bound(mu, det, "numeric_exact")
        assert numeric.f_min == pytest.approx(closed.f_min, rel=0.02)


class TestHonestDetector:
    def test_mu_0p1(self):
        b = honest_detector_wcp_bound(0.1)
        assert b.f_min == 0.05
        assert max_secure_distance(WeakCoherent(0.1), GE_APD, 0.38, 5.0, eve_controls_detector=False).l_max == pytest.approx(21.1, abs=0.05)

    def test_mu_0p01(self):
        assert honest_detector_wcp_bound(0.01).f_min == pytest.approx(0.005, rel=1e-15)

    @pytest.mark.parametrize("mu", [0.0, 0.3])
    def test_range(self, mu):
        with pytest.raises(ValueError):
            honest_detector_wcp_bound(mu)

    @settings(max_examples=200)
    @given(mu=st.floats(1e-4, 0.25), eta=st.floats(0.01, 1.0))
    def test_weaker_than_eve_controlled_multiphoton_bound(self, mu, eta):
        # leading order of p_multi / (eta mu) with p_multi ~ mu**2 / 2
        eve_controlled = (mu**2 / 2) / (eta * mu)
        assert honest_detector_wcp_bound(mu).f_min <= eve_controlled * (1 + 1e-15)


class TestPdc:
    def test_reference_optimum(self):
        b = optimal_pdc_chi(0.11, 1e-5, GE_APD)
        assert b.f_min == pytest.approx(8.45e-4, rel=0.01)

    def test_bound_at_optimum(self):
        chi_sq = optimal_pdc_chi(0.11, 1e-5, GE_APD).optimal_intensity
        b = pdc_transmission_bound(HeraldedPDC(chi_sq, 0.11, 1e-5), GE_APD)
        assert b.f_min == pytest.approx(8.45e-4, rel=0.01)

    def test_optimal_chi_sq_by_golden_section(self):
        det = GE_APD

        def objective(x):
            return pdc_transmission_bound(HeraldedPDC(x, 0.11, 1e-5), det).f_min

        x, _ = numeric_minimize(objective, (1e-7, 0.1))
        assert x == pytest.approx(2.193e-5, rel=1e-3)
        assert optimal_pdc_chi(0.11, 1e-5, det).optimal_intensity == pytest.approx(x, rel=1e-6)

    def test_optimal_chi_sq_by_grid(self):
        def objective(x):
            return 1e-10 / (0.11 * 0.11 * x) + 1e-5 / 0.11 + 1.89 * x / 0.11

        assert optimal_pdc_chi(0.11, 1e-5, GE_APD).optimal_intensity == pytest.approx(
            grid_argmin(objective, 1e-7, 1e-2), rel=1e-4
        )

    def test_perfect_heralding_detector(self):
        b = optimal_pdc_chi(1.0, 0.0, GE_APD)
        assert b.f_min == pytest.approx(1e-5 / 0.11, rel=1e-15)
        # vanishing chi**2 approaches the same limit
        tiny = pdc_transmission_bound(HeraldedPDC(1e-9, 1.0, 0.0), GE_APD)
        assert tiny.f_min == pytest.approx(9.09e-5, rel=1e-3)

    def test_numeric_at_closed_form_optimum(self):
        chi_sq = optimal_pdc_chi(0.11, 1e-5, GE_APD).optimal_intensity
        src = HeraldedPDC(chi_sq, 0.11, 1e-5)
        closed = pdc_transmission_bound(src, GE_APD).f_min
        numeric = pdc_transmission_bound(src, GE_APD, "numeric_exact").f_min
        assert numeric == pytest.approx(closed, rel=0.02)

    def test_numeric_optimum(self):
        closed = optimal_pdc_chi(0.11, 1e-5, GE_APD)
        numeric = optimal_pdc_chi(0.11, 1e-5, GE_APD, "numeric_exact")
        assert numeric.f_min == pytest.approx(closed.f_min, rel=0.02)

    def test_closed_form_refuses_large_chi(self):
        with pytest.raises(ValueError, match="numeric_exact"):
            pdc_transmission_bound(HeraldedPDC(0.2, 0.11, 1e-5), GE_APD)

    @settings(max_examples=100, deadline=None)
    @given(chi_sq=st.floats(1e-5, 5e-3), eta_a=st.floats(0.05, 1.0), d_a=st.floats(0.0, 1e-4))
    def test_exact_vs_closed_form(self, chi_sq, eta_a, d_a):
        src = HeraldedPDC(chi_sq, eta_a, d_a)
        closed = pdc_transmission_bound(src, GE_APD)
        if closed.f_min > 0.9:
            return
        numeric = pdc_transmission_bound(src, GE_APD, "numeric_exact")
        assert numeric.f_min == pytest.approx(closed.f_min, rel=0.02)

    def test_closed_form_drift_at_chi_sq_0p01(self):
        # The closed form ignores multi-photon pulses in the detected signal,
        # a relative O(chi**2) effect: about 3% here.
        src = HeraldedPDC(0.01, 0.11, 1e-5)
        closed = pdc_transmission_bound(src, GE_APD).f_min
        numeric = pdc_transmission_bound(src, GE_APD, "numeric_exact").f_min
        assert 0.02 < 1 - numeric / closed < 0.04


class TestMonotonicity:
    @settings(max_examples=120, deadline=None)
    @given(
        eta=st.floats(0.01, 1.0),
        dark=st.floats(1e-8, 1e-3),
        bump=st.floats(1.0, 10.0),
        eta_a=st.floats(0.01, 1.0),
        d_a=st.floats(1e-8, 1e-3),
    )
    def test_optimized_bounds(self, eta, dark, bump, eta_a, d_a):
        det = DetectorParams(eta, dark)
        worse_dark = DetectorParams(eta, min(0.49, dark * bump))
        better_eta = DetectorParams(min(1.0, eta * bump), dark)
        for src in (SinglePhoton(), WeakCoherent(0.1), HeraldedPDC(0.01, eta_a, d_a)):
            base = min_transmission(src, det, optimize_intensity=True).f_min
            assert min_transmission(src, worse_dark, optimize_intensity=True).f_min >= base * (1 - 1e-12)
            assert min_transmission(src, better_eta, optimize_intensity=True).f_min <= base * (1 + 1e-12)
        base = optimal_pdc_chi(eta_a, d_a, det).f_min
        assert optimal_pdc_chi(eta_a, min(0.99, d_a * bump), det).f_min >= base * (1 - 1e-12)
        assert optimal_pdc_chi(min(1.0, eta_a * bump), d_a, det).f_min <= base * (1 + 1e-12)


class TestDistance:
    def test_wcp(self):
        b = max_secure_distance(WeakCoherent(0.1), GE_APD, 0.38, 5.0, optimize_intensity=True)
        assert b.l_max == pytest.approx(23.5, abs=1.0)
        assert b.optimal_intensity == pytest.approx(4.47e-3, rel=1e-3)

    def test_wcp_mu_0p1_insecure_everywhere(self):
        b = max_secure_distance(WeakCoherent(0.1), GE_APD, 0.38, 5.0)
        assert not b.attainable and b.l_max is None

    def test_pdc(self):
        b = max_secure_distance(HeraldedPDC(0.01, 0.11, 1e-5), GE_APD, 0.38, 5.0, optimize_intensity=True)
        assert b.l_max == pytest.approx(67.8, abs=1.0)

    def test_pdc_perfect_heralding(self):
        b = max_secure_distance(HeraldedPDC(0.01, 1.0, 0.0), GE_APD, 0.38, 5.0, optimize_intensity=True)
        assert b.l_max == pytest.approx(93.2, abs=1.0)

    def test_single_photon(self):
        b = max_secure_distance(SinglePhoton(), GE_APD, 0.38, 5.0)
        assert b.l_max == pytest.approx((-10 * math.log10(1e-5 / 0.11) - 5) / 0.38, rel=1e-12)

    def test_no_dark_counts_unbounded(self):
        b = max_secure_distance(SinglePhoton(), DetectorParams(0.5, 0.0), 0.38, 5.0)
        assert b.l_max == math.inf

    def test_honest_optimization_rejected(self):
        with pytest.raises(ValueError):
            max_secure_distance(WeakCoherent(0.1), GE_APD, 0.38, 5.0, True, eve_controls_detector=False)


class TestNumericMinimize:
    def test_parabola(self):
        x, y = numeric_minimize(lambda x: (x - 2) ** 2, (0, 10))
        assert x == pytest.approx(2.0, rel=1e-10)
        assert y == pytest.approx(0.0, abs=1e-18)

    def test_reciprocal_plus_linear(self):
        a, b = 1e-10, 1.0
        x, _ = numeric_minimize(lambda x: a / x + b * x, (1e-7, 1e-3))
        assert x == pytest.approx(math.sqrt(a / b), rel=1e-9)

    def test_matches_pdc_optimum(self):
        x, f = numeric_minimize(lambda x: pdc_transmission_bound(HeraldedPDC(x, 0.11, 1e-5), GE_APD).f_min, (1e-6, 1e-3))
        opt = optimal_pdc_chi(0.11, 1e-5, GE_APD)
        assert x == pytest.approx(opt.optimal_intensity, rel=1e-6)
        assert f == pytest.approx(opt.f_min, rel=1e-12)

    def test_unordered_bracket(self):
        with pytest.raises(ValueError, match="ordered"):
            numeric_minimize(lambda x: x, (1.0, 0.0))

    def test_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            numeric_minimize(lambda x: math.nan, (0.0, 1.0))

    def test_iteration_cap(self):
        calls = []

        def f(x):
            calls.append(x)
            return (x - 0.3) ** 2

        numeric_minimize(f, (0.0, 1.0), tol=0.0, polish=False)
        assert len(calls) <= 202


def test_exact_min_transmission_unattainable_returns_inf():
    assert exact_min_transmission(poisson_distribution(0.9), GE_APD) == math.inf
