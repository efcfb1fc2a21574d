import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ratio_rmt as rr
from ratio_rmt.analytic import (DEFAULT_THRESHOLDS, DensityGrid,
                                DispatchThresholds, MasterIntegralParams,
                                beta2_coefficients, joint_density_beta1,
                                joint_density_beta2, master_integral,
                                pdf_beta1, pdf_beta1_k0, pdf_beta2,
                                pdf_beta2_k0, poisson_ratio_pdf,
                                surmise_ratio_pdf)
from ratio_rmt.ensemble import SymmetryClass
from ratio_rmt.exceptions import DomainError
from ratio_rmt.numerics import QuadratureSpec, integrate_1d

from _oracles import master_integral_pv

ORTH = SymmetryClass.ORTHOGONAL
UNIT = SymmetryClass.UNITARY

SQ3 = math.sqrt(3.0)


class TestSurmise:
    def test_level_repulsion_at_zero(self):
        assert surmise_ratio_pdf(ORTH, 0.0) == 0.0
        assert surmise_ratio_pdf(UNIT, 0.0) == 0.0

    def test_orthogonal_at_one(self):
        # 27/8 * 2 / 3^(5/2)
        assert surmise_ratio_pdf(ORTH, 1.0) == pytest.approx(SQ3 / 4.0, abs=1e-15)
        assert surmise_ratio_pdf(ORTH, 1.0) == pytest.approx(0.433013, abs=5e-7)

    def test_unitary_at_one(self):
        assert surmise_ratio_pdf(UNIT, 1.0) == pytest.approx(SQ3 / math.pi, abs=1e-15)
        assert surmise_ratio_pdf(UNIT, 1.0) == pytest.approx(0.551329, abs=5e-7)

    def test_normalized(self):
        for cls in (ORTH, UNIT):
            mass = integrate_1d(lambda x: surmise_ratio_pdf(cls, x), 0.0, 2000.0,
                                QuadratureSpec(abs_tol=1e-10, rel_tol=1e-10,
                                               max_subdivisions=4000))
            assert mass == pytest.approx(1.0, abs=1e-6)

    def test_accepts_beta_integers(self):
        assert surmise_ratio_pdf(1, 1.0) == surmise_ratio_pdf(ORTH, 1.0)

    def test_negative_r_rejected(self):
        with pytest.raises(DomainError):
            surmise_ratio_pdf(ORTH, -0.5)


class TestPoisson:
    def test_values(self):
        assert poisson_ratio_pdf(0.0) == 1.0
        assert poisson_ratio_pdf(1.0) == 0.25

    def test_exact_normalization(self):
        # antiderivative -(1+r)^-1: mass over [0, R] is 1 - 1/(1+R)
        mass = integrate_1d(poisson_ratio_pdf, 0.0, 1e6,
                            QuadratureSpec(rel_tol=1e-10, max_subdivisions=4000))
        assert mass == pytest.approx(1.0 - 1.0 / (1.0 + 1e6), rel=1e-9)

    def test_negative_r_rejected(self):
        with pytest.raises(DomainError):
            poisson_ratio_pdf(-1e-9)


class TestDecoupledForms:
    def test_beta1_at_zero(self):
        assert pdf_beta1_k0(0.0) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)

    def test_beta1_at_one(self):
        # bracket = 2/2^(3/2) + 2/5^(3/2)
        expected = (2.0 / 2.0 ** 1.5 + 2.0 / 5.0 ** 1.5) / (2.0 * math.sqrt(2.0))
        assert pdf_beta1_k0(1.0) == pytest.approx(expected, abs=1e-15)
        assert pdf_beta1_k0(1.0) == pytest.approx(0.3132455532, abs=1e-10)

    def test_beta2_at_zero(self):
        assert pdf_beta2_k0(0.0) == pytest.approx(2.0 / math.pi, abs=1e-15)

    def test_beta2_at_one(self):
        assert pdf_beta2_k0(1.0) == pytest.approx(1.08 / math.pi, abs=1e-15)
        assert pdf_beta2_k0(1.0) == pytest.approx(0.343775, abs=5e-7)

    def test_both_normalized(self):
        # fold the 1/r^2 tail onto [0, 1]: int_0^inf p = int_0^1 [p + p(1/s)/s^2]
        spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-13, max_subdivisions=4000)
        for pdf in (pdf_beta1_k0, pdf_beta2_k0):
            mass = integrate_1d(lambda s: pdf(s) + pdf(1.0 / s) / (s * s),
                                1e-12, 1.0, spec)
            assert mass == pytest.approx(1.0, abs=1e-9)

    def test_distinct_from_poisson(self):
        assert abs(pdf_beta1_k0(0.0) - poisson_ratio_pdf(0.0)) == pytest.approx(
            1.0 - 1.0 / math.sqrt(2.0), abs=1e-15)
        rs = np.linspace(0.0, 5.0, 501)
        sup1 = np.max(np.abs(pdf_beta1_k0(rs) - poisson_ratio_pdf(rs)))
        sup2 = np.max(np.abs(pdf_beta2_k0(rs) - poisson_ratio_pdf(rs)))
        assert sup1 >= 0.29
        assert sup2 >= 0.36


class TestBeta2Coefficients:
    def test_k_to_one_limit(self):
        co = beta2_coefficients(1.0 - 1e-10, 1.0)
        assert co.a[0] == pytest.approx(math.sqrt(2.0), rel=1e-9)
        assert co.b[0] == pytest.approx(0.0, abs=1e-9)
        assert co.c[0] == pytest.approx(SQ3 / 2.0, rel=1e-9)

    def test_r0_first_two_equal(self):
        co = beta2_coefficients(0.6, 0.0)
        assert co.a[0] == pytest.approx(co.a[1], rel=1e-15)
        assert co.a[0] == pytest.approx(math.sqrt(2.0 / (2.0 + 0.36)), rel=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            beta2_coefficients(0.0, 1.0)
        with pytest.raises(DomainError):
            beta2_coefficients(1.0, 1.0)

    @settings(max_examples=80, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=0.999),
           st.floats(min_value=0.0, max_value=1e3))
    def test_a_positive(self, k, r):
        co = beta2_coefficients(k, r)
        assert np.all(co.a > 0.0)


class TestPdfBeta2:
    def test_high_dispatch_is_surmise(self):
        for r in (0.1, 0.5, 1.0, 2.0, 5.0):
            assert pdf_beta2(0.9995, r) == surmise_ratio_pdf(UNIT, r)

    def test_low_dispatch_is_decoupled(self):
        assert pdf_beta2(0.01, 1.0) == pdf_beta2_k0(1.0)

    def test_oracle_pinned_value(self):
        # joint-density quadrature value, pinned in the fixtures
        assert pdf_beta2(0.5, 1.0) == pytest.approx(0.5413239779398282, abs=1e-9)

    def test_vectorized_matches_scalar(self):
        rs = np.array([0.1, 1.0, 3.0])
        np.testing.assert_allclose(pdf_beta2(0.4, rs),
                                   [pdf_beta2(0.4, float(r)) for r in rs],
                                   rtol=1e-15)

    def test_inversion_symmetry(self):
        for k in (0.1, 0.4, 0.9):
            for r in (0.2, 0.5, 2.0, 5.0):
                assert pdf_beta2(k, r) == pytest.approx(
                    pdf_beta2(k, 1.0 / r) / r ** 2, abs=1e-6)

    def test_normalization(self):
        for k in (0.1, 0.3, 0.5, 0.8):
            assert DensityGrid(UNIT, k).total_mass == pytest.approx(1.0, abs=1e-6)

    def test_zero_at_origin_for_positive_k(self):
        # levels repel at any k > 0; the decoupled limit does not
        assert pdf_beta2(0.1, 0.0) == 0.0
        assert pdf_beta2_k0(0.0) > 0.6

    def test_continuity_at_high_switchover(self):
        rs = np.linspace(0.0, 5.0, 101)
        sup = max(abs(pdf_beta2(DEFAULT_THRESHOLDS.k_high - 1e-4, float(r))
                      - surmise_ratio_pdf(UNIT, float(r))) for r in rs)
        assert sup < 5e-3

    def test_continuity_at_low_switchover(self):
        # below r ~ 0.25 the correlation hole makes the k -> 0 limit
        # non-uniform (p(k;0)=0 for all k>0), so the switchover bound
        # holds away from the origin
        rs = np.linspace(0.3, 5.0, 95)
        sup = max(abs(pdf_beta2(DEFAULT_THRESHOLDS.k_low + 1e-4, float(r))
                      - pdf_beta2_k0(float(r))) for r in rs)
        assert sup < 5e-3

    def test_master_integral_assembly(self):
        # closed form == sum of the three master-integral pieces
        for k in (0.3, 0.7):
            k2 = k * k
            g2 = 1.0 + 2.0 / k2
            for r in (0.5, 1.0, 2.0):
                i1 = master_integral(MasterIntegralParams(
                    1.0 - r * r + 2.0 * r * r / k2, 1.0 + r - 2.0 * r / k2,
                    g2, r - 1.0, r))
                i2 = -(r + 1.0) * master_integral(MasterIntegralParams(
                    1.0 + r * r, 1.0 - r, g2, -1.0, r))
                i3 = r * master_integral(MasterIntegralParams(
                    r * r + 2.0 / k2 - 1.0, 2.0 / k2 - r - 1.0, g2, -1.0, r - 1.0))
                pref = (2.0 * math.sqrt(2.0 - k2)
                        / (math.pi ** 1.5 * k * (1.0 - k2) ** 2) * r * (r + 1.0))
                assert pref * (i1 + i2 + i3) == pytest.approx(
                    pdf_beta2(k, r), abs=1e-10)

    def test_far_tail_finite(self):
        v = pdf_beta2(0.5, 1e3)
        assert 0.0 < v < 1e-5

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            pdf_beta2(1.2, 1.0)
        with pytest.raises(DomainError):
            pdf_beta2(0.5, -1.0)


class TestPdfBeta1:
    def test_high_dispatch_is_surmise(self):
        assert pdf_beta1(0.9995, 1.0) == pytest.approx(SQ3 / 4.0, abs=1e-15)

    def test_low_dispatch_is_decoupled(self):
        assert pdf_beta1(0.01, 1.0) == pdf_beta1_k0(1.0)

    def test_inversion_symmetry_quadrature(self):
        # p(k; r) = r^-2 p(k; 1/r), from the lambda -> -lambda symmetry
        assert pdf_beta1(0.5, 2.0) == pytest.approx(pdf_beta1(0.5, 0.5) / 4.0,
                                                    rel=1e-7)

    def test_zero_at_origin(self):
        assert pdf_beta1(0.5, 0.0) == 0.0

    def test_oracle_pinned_value(self):
        assert pdf_beta1(0.3, 1.0) == pytest.approx(0.396755061898, abs=2e-9)

    def test_normalization_k03(self):
        assert DensityGrid(ORTH, 0.3).total_mass == pytest.approx(1.0, abs=1e-3)

    def test_array_input(self):
        vals = pdf_beta1(0.4, np.array([0.5, 1.0]))
        assert vals.shape == (2,)
        assert vals[0] == pdf_beta1(0.4, 0.5)

    def test_continuity_at_low_switchover(self):
        rs = np.linspace(0.3, 5.0, 25)
        sup = max(abs(pdf_beta1(DEFAULT_THRESHOLDS.k_low + 1e-4, float(r))
                      - pdf_beta1_k0(float(r))) for r in rs)
        assert sup < 5e-3

    def test_continuity_at_high_switchover(self):
        rs = np.linspace(0.05, 5.0, 25)
        sup = max(abs(pdf_beta1(DEFAULT_THRESHOLDS.k_high - 1e-4, float(r))
                      - surmise_ratio_pdf(ORTH, float(r))) for r in rs)
        assert sup < 5e-3

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            pdf_beta1(-0.1, 1.0)

    def test_custom_thresholds(self):
        th = DispatchThresholds(k_low=0.05, k_high=0.9)
        assert pdf_beta1(0.04, 1.0, thresholds=th) == pdf_beta1_k0(1.0)
        assert pdf_beta1(0.95, 1.0, thresholds=th) == surmise_ratio_pdf(ORTH, 1.0)
        with pytest.raises(DomainError):
            DispatchThresholds(k_low=0.5, k_high=0.4)


class TestJointDensityBeta1:
    def test_sign_flip_symmetry(self):
        a = joint_density_beta1(0.5, 1.0, -2.0, 0.5)
        b = joint_density_beta1(0.5, -1.0, 2.0, -0.5)
        assert a == pytest.approx(b, rel=1e-12)

    def test_first_two_arguments_symmetric(self):
        a = joint_density_beta1(0.4, 0.3, 1.1, -0.2)
        b = joint_density_beta1(0.4, 1.1, 0.3, -0.2)
        assert a == pytest.approx(b, rel=1e-12)

    def test_positive(self):
        assert joint_density_beta1(0.3, -0.5, 0.7, 0.1) > 0.0

    def test_k_domain(self):
        with pytest.raises(DomainError):
            joint_density_beta1(1.0, 0.1, 0.2, 0.3)


class TestJointDensityBeta2:
    def test_sign_flip_symmetry(self):
        a = joint_density_beta2(0.5, 1.0, 2.0, 3.0)
        b = joint_density_beta2(0.5, -1.0, -2.0, -3.0)
        assert a == pytest.approx(b, rel=1e-12)

    def test_permutation_invariance(self):
        vals = {joint_density_beta2(0.6, *perm) for perm in
                [(0.3, 1.0, -0.4), (1.0, 0.3, -0.4), (-0.4, 1.0, 0.3)]}
        assert max(vals) - min(vals) < 1e-15 * max(abs(v) for v in vals)

    def test_removable_singularity_finite(self):
        l1 = 0.7
        near = joint_density_beta2(0.5, l1, -l1 + 1e-6, 0.4)
        nearer = joint_density_beta2(0.5, l1, -l1 + 1e-7, 0.4)
        assert abs(near - nearer) / abs(nearer) < 1e-3

    def test_series_branch_continuous(self):
        l1 = 0.7
        outside = joint_density_beta2(0.5, l1, -l1 + 2e-8, 0.4)
        inside = joint_density_beta2(0.5, l1, -l1 + 0.5e-8, 0.4)
        assert abs(outside - inside) / abs(outside) < 1e-6

    def test_positive_on_random_points(self, rng):
        pts = rng.normal(size=(200, 3))
        vals = joint_density_beta2(0.45, pts[:, 0], pts[:, 1], pts[:, 2])
        assert np.all(vals >= 0.0)


class TestMasterIntegral:
    PARAMS = (1.0, 0.0, 4.0, 1.0, 2.0)
    # closed form at the pinned parameter point, confirmed to 9e-16 by the
    # principal-value oracle and to 30 digits by high-precision arithmetic
    PINNED = 0.2437002899395400

    def test_pinned_value(self):
        assert master_integral(self.PARAMS) == pytest.approx(self.PINNED, abs=1e-12)

    def test_spec_sheet_value_to_its_precision(self):
        # the coarser published figure 0.243704 carries ~4e-6 rounding slack
        assert master_integral(self.PARAMS) == pytest.approx(0.243704, abs=5e-6)

    def test_pv_oracle(self):
        assert master_integral(self.PARAMS) == pytest.approx(
            master_integral_pv(*self.PARAMS), abs=1e-9)

    def test_swap_exchange_invariance(self):
        a = master_integral((1.0, 0.0, 4.0, 1.0, 2.0))
        b = master_integral((1.0, 0.0, 4.0, 2.0, 1.0))
        assert abs(a - b) <= 1e-14

    def test_parity_mapping(self):
        a = master_integral((2.0, 0.7, 3.0, 0.5, 1.5))
        b = master_integral((2.0, -0.7, 3.0, -0.5, -1.5))
        assert a == pytest.approx(b, rel=1e-14)

    def test_convergence_conditions(self):
        with pytest.raises(DomainError):
            MasterIntegralParams(1.0, 3.0, 4.0, 1.0, 2.0)  # a^2 < 0
        with pytest.raises(DomainError):
            MasterIntegralParams(1.0, 0.0, 4.0, 1.0, 1.0)  # u == v


class TestDensityGrid:
    def test_interpolation_budget_beta2(self, rng):
        g = DensityGrid(UNIT, 0.5)
        pts = np.exp(rng.uniform(np.log(2e-3), np.log(5e2), 50))
        direct = np.array([pdf_beta2(0.5, float(p)) for p in pts])
        rel = np.max(np.abs(g.pdf(pts) - direct) / direct)
        assert rel < 1e-4

    def test_interpolation_budget_beta1(self, rng):
        g = DensityGrid(ORTH, 0.3)
        pts = np.exp(rng.uniform(np.log(2e-3), np.log(5e2), 25))
        direct = np.array([pdf_beta1(0.3, float(p)) for p in pts])
        rel = np.max(np.abs(g.pdf(pts) - direct) / direct)
        assert rel < 1e-4

    def test_cdf_monotone_and_normalized(self):
        g = DensityGrid(UNIT, 0.4)
        rs = np.geomspace(1e-5, 1e5, 300)
        cdf = g.cdf(rs)
        assert np.all(np.diff(cdf) >= 0)
        assert cdf[0] < 1e-4 and cdf[-1] == pytest.approx(1.0, abs=1e-5)
        assert g.cdf(0.0) == 0.0

    def test_off_grid_direct_fallback(self):
        g = DensityGrid(UNIT, 0.4)
        assert g.pdf(2e3) == pytest.approx(pdf_beta2(0.4, 2e3), rel=1e-12)

    def test_immutable_reuse(self):
        g = DensityGrid(UNIT, 0.4)
        a = g.pdf(1.0)
        assert g.pdf(1.0) == a
