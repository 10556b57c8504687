"""Decision rules, calibrated constructions, and region geometry."""

import math

import numpy as np
import pytest

from omt2 import (AlternativeModel, DomainError, UnsupportedModel,
                  bonferroni, build_bittman, build_omt,
                  closed_stouffer, combo_any_one, export_region,
                  fixed_sequence, fwer_global, hommel,
                  hommel_coincidence_bound, mc_estimate, pure_any, pure_avg,
                  pure_one, region_mass, region_symmetric_difference,
                  std_normal_quantile)

ALPHA = 0.025
ZA = std_normal_quantile(ALPHA)
ZH = std_normal_quantile(ALPHA / 2)


@pytest.fixture(scope="module")
def all_procedures(quad_cfg):
    """Every builtin plus constructed rules, symmetric and asymmetric."""
    m_sym = AlternativeModel(-2.0, -2.0)
    m_asym = AlternativeModel(-1.2, -2.7)
    return {
        "bonferroni": bonferroni(ALPHA),
        "hommel": hommel(ALPHA),
        "closed_stouffer": closed_stouffer(ALPHA),
        "fixed_sequence": fixed_sequence(ALPHA),
        "bittman": build_bittman(ALPHA, quad_cfg),
        "omt_one": build_omt(pure_one(m_sym, ALPHA), quad_cfg),
        "omt_any": build_omt(pure_any(m_sym, ALPHA), quad_cfg),
        "omt_combo_asym": build_omt(combo_any_one(m_asym, ALPHA), quad_cfg),
    }


class TestDecide:
    def test_hommel_small_first_pvalue(self):
        d = hommel(ALPHA).decide((0.01, 0.9))
        assert d.as_tuple() == (True, False)

    def test_hommel_both_below_alpha(self):
        d = hommel(ALPHA).decide((0.02, 0.02))
        assert d.as_tuple() == (True, True)

    def test_closed_stouffer_pulls_in_weak_partner(self):
        # z-sum ~ -5.70 is far below sqrt(2) * quantile(alpha) ~ -2.77
        d = closed_stouffer(ALPHA).decide((0.0001, 0.024))
        assert d.as_tuple() == (True, True)

    def test_fixed_sequence_stops_at_first_failure(self):
        d = fixed_sequence(ALPHA).decide((0.03, 0.001))
        assert d.as_tuple() == (False, False)

    def test_fixed_sequence_passes_through(self):
        assert fixed_sequence(ALPHA).decide((0.01, 0.01)).as_tuple() == (True, True)
        assert fixed_sequence(ALPHA).decide((0.01, 0.5)).as_tuple() == (True, False)

    def test_bonferroni_halved_level(self):
        proc = bonferroni(ALPHA)
        assert proc.decide((0.012, 0.013)).as_tuple() == (True, False)

    def test_pvalue_domain(self):
        with pytest.raises(DomainError):
            hommel(ALPHA).decide((0.0, 0.5))
        with pytest.raises(DomainError):
            hommel(ALPHA).decide((0.5, 1.2))
        # exactly 1 is a legal (never-rejected) observation
        assert hommel(ALPHA).decide((1.0, 1.0)).as_tuple() == (False, False)

    def test_subnormal_pvalue_clamped(self):
        # values below the clamp floor are treated as the floor, not
        # rejected as inputs
        assert hommel(ALPHA).decide((1e-320, 0.9)).as_tuple() == (True, False)

    def test_alpha_validation(self):
        with pytest.raises(DomainError):
            hommel(0.0)
        with pytest.raises(DomainError):
            build_bittman(-0.01)


class TestBittman:
    def test_threshold_above_stouffer(self, quad_cfg):
        b = build_bittman(ALPHA, quad_cfg)
        assert b.t_sum > math.sqrt(2.0) * ZA + 1e-6

    def test_null_level_exact(self, quad_cfg):
        b = build_bittman(ALPHA, quad_cfg)
        assert fwer_global(b, 0.0, quad_cfg) == pytest.approx(ALPHA, abs=1e-8)

    def test_null_level_mc(self, quad_cfg, mc_cfg):
        b = build_bittman(ALPHA, quad_cfg)
        mean, se = mc_estimate(lambda z1, z2: np.logical_or(*b.decide_z(z1, z2)),
                               AlternativeModel(0.0, 0.0), mc_cfg)
        assert abs(mean - ALPHA) <= 3 * se

    def test_symmetric_level_half(self, quad_cfg):
        b = build_bittman(0.5, quad_cfg)
        assert b.t_sum == pytest.approx(0.0, abs=1e-6)
        assert fwer_global(b, 0.0, quad_cfg) == pytest.approx(0.5, abs=1e-8)


class TestCoincidenceBound:
    def test_reference_value(self):
        assert hommel_coincidence_bound(0.025) == pytest.approx(-2.46, abs=0.01)

    def test_formula(self):
        expected = -math.log(2.0) / (ZA - ZH)
        assert hommel_coincidence_bound(0.025) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(-2.4627, abs=1e-3)

    def test_other_level(self):
        za, zh = std_normal_quantile(0.05), std_normal_quantile(0.025)
        assert hommel_coincidence_bound(0.05) == pytest.approx(
            -math.log(2.0) / (za - zh), rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            hommel_coincidence_bound(0.5)


class TestOmtConstruction:
    @pytest.mark.parametrize("theta", [-1.0, -2.0, -2.4])
    def test_one_false_null_matches_hommel_above_bound(self, theta, quad_cfg):
        proc = build_omt(pure_one(AlternativeModel(theta, theta), ALPHA), quad_cfg)
        diff = region_symmetric_difference(proc, hommel(ALPHA), quad_cfg)
        assert diff < 1e-6
        # threshold has the closed form lr(alpha/2)/2 in this regime
        from omt2 import lr_density
        assert proc.t_score == pytest.approx(
            0.5 * float(lr_density(ALPHA / 2, theta)), rel=1e-6)

    def test_one_false_null_departs_below_bound(self, quad_cfg):
        proc = build_omt(pure_one(AlternativeModel(-2.9, -2.9), ALPHA), quad_cfg)
        diff = region_symmetric_difference(proc, hommel(ALPHA), quad_cfg)
        assert diff > 5e-6          # genuinely different region
        assert diff == pytest.approx(2.1e-5, rel=0.15)

    @pytest.mark.parametrize("theta", [-2.0, -2.9])
    def test_any_objective_is_sum_rule(self, theta, quad_cfg):
        proc = build_omt(pure_any(AlternativeModel(theta, theta), ALPHA), quad_cfg)
        b = build_bittman(ALPHA, quad_cfg)
        assert region_symmetric_difference(proc, b, quad_cfg) < 1e-6

    def test_any_objective_decisions_match_sum_rule_on_grid(self, quad_cfg):
        proc = build_omt(pure_any(AlternativeModel(-2.9, -2.9), ALPHA), quad_cfg)
        b = build_bittman(ALPHA, quad_cfg)
        g = np.linspace(-4.0, 0.0, 512)
        z1, z2 = np.meshgrid(g, g, indexing="ij")
        d1a, d2a = proc.decide_z(z1.ravel(), z2.ravel())
        d1b, d2b = b.decide_z(z1.ravel(), z2.ravel())
        assert np.array_equal(d1a, d1b)
        assert np.array_equal(d2a, d2b)

    def test_avg_and_any_regions_coincide(self, quad_cfg):
        m = AlternativeModel(-2.7, -2.7)
        pa = build_omt(pure_avg(m, ALPHA), quad_cfg)
        pb = build_omt(pure_any(m, ALPHA), quad_cfg)
        assert region_symmetric_difference(pa, pb, quad_cfg) < 1e-6

    def test_degenerate_level(self, quad_cfg):
        proc = build_omt(pure_one(AlternativeModel(-2.0, -2.0), 1e-12), quad_cfg)
        area = fwer_global(proc, 0.0, quad_cfg)
        assert area <= 1.03e-12
        assert proc.decide((1e-3, 0.5)).as_tuple() == (False, False)

    def test_correlated_model_unsupported(self, quad_cfg):
        spec = pure_one(AlternativeModel(-2.0, -2.0, 0.3), ALPHA)
        with pytest.raises(UnsupportedModel):
            build_omt(spec, quad_cfg)

    @pytest.mark.parametrize("theta", [(-1.0, -3.0), (-3.0, -1.0), (-1.2, -2.7)])
    def test_asymmetric_builds_calibrate(self, theta, quad_cfg):
        for maker in (pure_any, pure_avg, pure_one, combo_any_one):
            proc = build_omt(maker(AlternativeModel(*theta), ALPHA), quad_cfg)
            assert fwer_global(proc, 0.0, quad_cfg) == pytest.approx(ALPHA, abs=1e-8)

    def test_coarse_quadrature_profile_still_calibrates(self):
        from omt2 import QuadratureConfig
        coarse = QuadratureConfig(panels_per_axis=12, nodes_per_panel=8,
                                  abs_tol=1e-6)
        fine = QuadratureConfig()
        proc = build_omt(combo_any_one(AlternativeModel(-2.5, -1.5), ALPHA),
                         coarse)
        assert fwer_global(proc, 0.0, fine) == pytest.approx(ALPHA, abs=1e-6)


class TestStructuralRestrictions:
    def test_marginal_nominality(self, all_procedures, rng):
        """No rule rejects a hypothesis whose own p-value exceeds alpha
        (10^5 random p-value pairs, zero violations)."""
        n = 100_000
        p = rng.uniform(1e-8, 1 - 1e-8, size=(n, 2))
        z1 = std_normal_quantile(p[:, 0])
        z2 = std_normal_quantile(p[:, 1])
        for name, proc in all_procedures.items():
            d1, d2 = proc.decide_z(z1, z2)
            assert not np.any(d1 & (p[:, 0] > ALPHA)), name
            assert not np.any(d2 & (p[:, 1] > ALPHA)), name

    def test_weak_monotonicity(self, all_procedures, rng):
        """10^4 ordered pairs per rule: smaller p-values get at least as
        large decisions."""
        n = 10_000
        a = np.sort(rng.uniform(1e-8, 1 - 1e-8, size=(n, 2)), axis=1)
        b = np.sort(rng.uniform(1e-8, 1 - 1e-8, size=(n, 2)), axis=1)
        z_lo1, z_hi1 = std_normal_quantile(a[:, 0]), std_normal_quantile(a[:, 1])
        z_lo2, z_hi2 = std_normal_quantile(b[:, 0]), std_normal_quantile(b[:, 1])
        for name, proc in all_procedures.items():
            d1_lo, d2_lo = proc.decide_z(z_lo1, z_lo2)
            d1_hi, d2_hi = proc.decide_z(z_hi1, z_hi2)
            assert not np.any(d1_hi & ~d1_lo), name
            assert not np.any(d2_hi & ~d2_lo), name

    def test_strong_fwer_at_null_configurations(self, all_procedures, quad_cfg):
        for name, proc in all_procedures.items():
            null = fwer_global(proc, 0.0, quad_cfg)
            assert null <= ALPHA + 1e-6, name
            # one true null: false rejections of the true null stay below alpha
            semi = region_mass(proc, "d2", AlternativeModel(-2.5, 0.0), quad_cfg)
            assert semi <= ALPHA + 1e-6, name
            semi = region_mass(proc, "d1", AlternativeModel(0.0, -2.5), quad_cfg)
            assert semi <= ALPHA + 1e-6, name

    def test_exact_level_kinds(self, all_procedures, quad_cfg):
        for name in ("bittman", "omt_one", "omt_any", "omt_combo_asym"):
            assert fwer_global(all_procedures[name], 0.0, quad_cfg) == \
                pytest.approx(ALPHA, abs=1e-6), name

    def test_bittman_dominates_closed_stouffer(self, all_procedures):
        g = np.linspace(-4.0, 0.0, 512)
        z1, z2 = np.meshgrid(g, g, indexing="ij")
        d1c, d2c = all_procedures["closed_stouffer"].decide_z(z1.ravel(), z2.ravel())
        d1b, d2b = all_procedures["bittman"].decide_z(z1.ravel(), z2.ravel())
        assert not np.any(d1c & ~d1b)
        assert not np.any(d2c & ~d2b)

    def test_unconstrained_any_rule_is_not_weakly_monotone(self):
        """The unrestricted optimum for the any-objective (reject the
        smaller p-value when the z-sum clears the Stouffer cut) violates
        weak monotonicity, so it is deliberately not offered as a rule;
        the canonical counterexample pair swaps which hypothesis gets
        rejected as both p-values shrink."""
        def unconstrained(p1, p2):
            keep = (std_normal_quantile(p1) + std_normal_quantile(p2)
                    <= math.sqrt(2.0) * ZA)
            if not keep:
                return (False, False)
            return (p1 <= p2, p2 < p1)

        a = ALPHA
        p = (a / 2 + a * a / 4, a / 2 - a * a / 4)
        q = (a / 3 - a * a / 4, a / 3 + a * a / 4)
        assert q[0] <= p[0] and q[1] <= p[1]
        dp = unconstrained(*p)
        dq = unconstrained(*q)
        assert dp == (False, True)
        assert dq == (True, False)
        # componentwise dq >= dp fails
        assert not (dq[0] >= dp[0] and dq[1] >= dp[1])


class TestRegionExport:
    def test_hommel_classes_follow_rule(self):
        grid = export_region(hommel(ALPHA), 128)
        c = grid.centers
        z1, z2 = np.meshgrid(c, c, indexing="ij")
        only1 = grid.classes == 1
        assert not np.any(only1 & (z1 > ZH) & (z2 > ZA))

    def test_hommel_square_is_both(self):
        grid = export_region(hommel(ALPHA), 256)
        c = grid.centers
        z1, z2 = np.meshgrid(c, c, indexing="ij")
        inside = (z1 <= ZA) & (z2 <= ZA)
        assert np.all(grid.classes[inside] == 3)

    def test_closed_stouffer_boundaries(self):
        grid = export_region(closed_stouffer(ALPHA), 512)
        c = grid.centers
        cell = c[1] - c[0]
        # on the diagonal the marginal p <= alpha constraint binds before
        # the z-sum cut (za < sqrt(2)*za/2), so both/none switches at za
        diag = np.array([grid.classes[i, i] for i in range(len(c))])
        k = np.max(np.where(diag == 3))
        assert abs(c[k] - ZA) <= cell + 1e-12
        # far off the diagonal (z1 > sqrt(2)*za - za) the z-sum threshold
        # becomes the visible only2/none boundary at z2 = sqrt(2)*za - z1
        i = int(np.argmin(np.abs(c + 0.3)))
        col = grid.classes[i, :]
        k2 = np.max(np.where(col == 2))
        assert abs(c[k2] - (math.sqrt(2.0) * ZA - c[i])) <= cell + 1e-12

    def test_omt_one_grid_identical_to_hommel(self, quad_cfg):
        proc = build_omt(pure_one(AlternativeModel(-2.0, -2.0), ALPHA), quad_cfg)
        ga = export_region(proc, 256)
        gb = export_region(hommel(ALPHA), 256)
        assert np.array_equal(ga.classes, gb.classes)

    def test_axis_includes_rule_boundaries(self):
        grid = export_region(hommel(ALPHA), 100)
        assert np.any(np.isclose(grid.axis, ZA, atol=1e-12))
        assert np.any(np.isclose(grid.axis, ZH, atol=1e-12))

    def test_csv_format(self):
        grid = export_region(bonferroni(ALPHA), 16, -3.0, 0.0)
        lines = grid.to_csv().splitlines()
        assert lines[0] == "z1,z2,class"
        assert len(lines) == 1 + 16 * 16
        first = lines[1].split(",")
        assert first[2] in ("none", "only1", "only2", "both")
        float(first[0]), float(first[1])

    def test_grid_size_floor(self):
        with pytest.raises(DomainError):
            export_region(hommel(ALPHA), 8)
