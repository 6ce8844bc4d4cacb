"""Tests for restricted Minkowski sum volumes and inequality checks."""

import math

import numpy as np
import pytest
from scipy.special import betainc

from freesum.errors import DegenerateSampleError, ParameterError
from freesum.geometry import (
    CheckReport,
    MonteCarloConfig,
    SetSpec,
    ThetaSpec,
    VolumeEstimate,
    ball_example_exact,
    bll_symmetrization_check,
    cap_fraction,
    check_corollary15,
    check_lemma13,
    check_remark16,
    check_theorem12,
    first_integral_fraction_at_extremal_r0,
    fubini_lower_bound,
    normal_cdf,
    register_theta_predicate,
    restricted_sum_volume,
    unit_ball_volume,
    volume,
)

FAST = MonteCarloConfig(pair_samples=200_000, seed=5)


class TestSpecs:
    def test_set_validation(self):
        with pytest.raises(ParameterError):
            SetSpec.ball(-1.0, 3)
        with pytest.raises(ParameterError):
            SetSpec.ball(1.0, 0)
        with pytest.raises(ParameterError):
            SetSpec.box([1.0, -0.5])
        with pytest.raises(ParameterError):
            SetSpec.ball(1.0, 2, center=(0.0,))
        with pytest.raises(ParameterError):
            SetSpec.intersection()
        with pytest.raises(ParameterError):
            SetSpec.intersection(SetSpec.ball(1, 2), SetSpec.ball(1, 3))
        with pytest.raises(ParameterError):
            SetSpec(kind="pyramid", dim=3)
        with pytest.raises(ParameterError):
            SetSpec.scaled(SetSpec.ball(1, 2), 0.0)

    def test_theta_validation(self):
        with pytest.raises(ParameterError):
            ThetaSpec.sum_norm_leq(0.0)
        with pytest.raises(ParameterError):
            ThetaSpec.complement_fraction(1.0)
        with pytest.raises(ParameterError):
            ThetaSpec.custom("")
        with pytest.raises(ParameterError):
            ThetaSpec(kind="weird")

    def test_volume_estimate_validation(self):
        with pytest.raises(ParameterError):
            VolumeEstimate(value=-1.0, stderr=0.0, samples=0, method="exact")
        with pytest.raises(ParameterError):
            VolumeEstimate(value=1.0, stderr=0.1, samples=0, method="exact")
        with pytest.raises(ParameterError):
            VolumeEstimate(value=1.0, stderr=0.0, samples=0, method="quad")

    def test_check_report_validation(self):
        with pytest.raises(ParameterError):
            CheckReport(lhs=1, rhs=1, deficit=0, ci_halfwidth=0, verdict="maybe")
        with pytest.raises(ParameterError):
            CheckReport(lhs=1, rhs=1, deficit=0, ci_halfwidth=-1, verdict="holds")

    def test_mc_config_validation(self):
        with pytest.raises(ParameterError):
            MonteCarloConfig(pair_samples=10)
        with pytest.raises(ParameterError):
            MonteCarloConfig(n_streams=0)
        with pytest.raises(ParameterError):
            MonteCarloConfig(c=0.0)
        with pytest.raises(ParameterError):
            MonteCarloConfig(C=-1.0)
        with pytest.raises(ParameterError):
            MonteCarloConfig(pairing_rounds=0)

    def test_origin_symmetry(self):
        assert SetSpec.ball(1, 3).origin_symmetric()
        assert SetSpec.box([1, 2], center=(0.0, 0.0)).origin_symmetric()
        assert not SetSpec.box([1, 2], center=(0.1, 0.0)).origin_symmetric()
        nested = SetSpec.scaled(
            SetSpec.intersection(SetSpec.ball(1, 2), SetSpec.box([0.5, 0.7])), 2.0
        )
        assert nested.origin_symmetric()


class TestVolume:
    def test_ball_area_is_pi(self):
        est = volume(SetSpec.ball(1.0, 2))
        assert est.method == "exact"
        assert est.stderr == 0.0
        assert est.value == pytest.approx(math.pi, abs=1e-15)

    def test_ball_homogeneity_exact(self):
        # lambda(rho B^n) / lambda(B^n) = rho^n
        for n, rho in ((3, 0.5), (7, 0.9), (12, 0.3)):
            ratio = volume(SetSpec.ball(rho, n)).value / volume(SetSpec.ball(1, n)).value
            assert ratio == pytest.approx(rho**n, rel=1e-12)

    def test_scaled_volume_exact(self):
        direct = volume(SetSpec.ball(0.5, 3)).value
        scaled = volume(SetSpec.scaled(SetSpec.ball(1.0, 3), 0.5)).value
        assert scaled == pytest.approx(direct, rel=1e-14)
        boxed = volume(SetSpec.scaled(SetSpec.box([1.0, 2.0]), 3.0)).value
        assert boxed == pytest.approx(9.0 * 8.0, rel=1e-14)

    def test_ellipsoid_volume(self):
        est = volume(SetSpec.ellipsoid([1.0, 2.0, 3.0]))
        assert est.value == pytest.approx(unit_ball_volume(3) * 6.0, rel=1e-14)

    def test_dimension_limits(self):
        with pytest.raises(ParameterError):
            volume(SetSpec.ball(1.0, 65))
        big = SetSpec.intersection(SetSpec.ball(1, 11), SetSpec.box([1.0] * 11))
        with pytest.raises(ParameterError):
            volume(big, FAST)

    def test_intersection_box_inside_disk(self):
        # box [-0.5, 0.5]^2 sits inside the unit disk, so the intersection
        # is the box itself; the MC bounding box equals the box, making the
        # estimate exact
        inter = SetSpec.intersection(SetSpec.ball(1.0, 2), SetSpec.box([0.5, 0.5]))
        est = volume(inter, MonteCarloConfig(pair_samples=200_000, seed=7))
        assert est.method == "mc_hit_or_miss"
        assert abs(est.value - 1.0) <= max(3.0 * est.stderr, 1e-12)

    def test_intersection_off_center_matches_grid_oracle(self):
        inter = SetSpec.intersection(
            SetSpec.ball(1.0, 2), SetSpec.box([0.8, 0.8], center=(0.5, 0.0))
        )
        est = volume(inter, MonteCarloConfig(pair_samples=400_000, seed=7))
        # independent pixel-counting oracle on the bounding box
        lo, hi = inter.bounding_box()
        m = 2000
        xs = np.linspace(lo[0], hi[0], m, endpoint=False) + (hi[0] - lo[0]) / (2 * m)
        ys = np.linspace(lo[1], hi[1], m, endpoint=False) + (hi[1] - lo[1]) / (2 * m)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        cell = (hi[0] - lo[0]) * (hi[1] - lo[1]) / m**2
        oracle = np.count_nonzero(inter.contains(pts)) * cell
        assert abs(est.value - oracle) <= 3.0 * est.stderr + 0.01


class TestRestrictedSum:
    def test_disk_doubling_close_to_4pi(self):
        # A + A = 2A for convex A; full pair constraint on two unit disks
        cfg = MonteCarloConfig(pair_samples=10_000_000, grid_cells_per_axis=512, seed=11)
        rsv = restricted_sum_volume(SetSpec.ball(1, 2), SetSpec.ball(1, 2), ThetaSpec.full(), cfg)
        sv = rsv["sum_volume"]
        assert sv.method == "occupancy_grid"
        assert sv.low_biased
        assert abs(sv.value - 4.0 * math.pi) <= 0.03 * 4.0 * math.pi

    def test_half_space_pair_fraction(self):
        cfg = MonteCarloConfig(pair_samples=1_000_000, seed=3)
        A, B = SetSpec.ball(1, 3), SetSpec.ball(0.8, 3)
        rsv = restricted_sum_volume(A, B, ThetaSpec.inner_product_leq(0.0), cfg)
        tv = rsv["theta_volume"]
        pair_vol = volume(A).value * volume(B).value
        frac = tv.value / pair_vol
        sigma = tv.stderr / pair_vol
        assert abs(frac - 0.5) <= 3.0 * sigma

    def test_orthogonal_sum_is_dilated_ball(self):
        # restricted sum of B^3 and 0.8 B^3 under <x,y> <= 0 fills
        # sqrt(1.64) B^3; occupancy is low-biased with a covering allowance
        cfg = MonteCarloConfig(pair_samples=1_000_000, seed=3)
        rsv = restricted_sum_volume(
            SetSpec.ball(1, 3), SetSpec.ball(0.8, 3), ThetaSpec.inner_product_leq(0.0), cfg
        )
        target = (1.0 + 0.64) ** 1.5 * unit_ball_volume(3)
        sv = rsv["sum_volume"]
        assert sv.value <= 1.05 * target
        assert sv.value + 3.0 * sv.stderr >= target

    def test_no_admitted_pairs_raises(self):
        with pytest.raises(DegenerateSampleError):
            restricted_sum_volume(
                SetSpec.ball(1, 2), SetSpec.ball(1, 2), ThetaSpec.inner_product_leq(-100.0), FAST
            )

    def test_grid_size_guard(self):
        with pytest.raises(ParameterError):
            restricted_sum_volume(
                SetSpec.ball(1, 4),
                SetSpec.ball(1, 4),
                ThetaSpec.full(),
                MonteCarloConfig(pair_samples=10_000, grid_cells_per_axis=512),
            )

    def test_dimension_limits(self):
        with pytest.raises(ParameterError):
            restricted_sum_volume(SetSpec.ball(1, 7), SetSpec.ball(1, 7), ThetaSpec.full(), FAST)
        with pytest.raises(ParameterError):
            restricted_sum_volume(SetSpec.ball(1, 2), SetSpec.ball(1, 3), ThetaSpec.full(), FAST)

    def test_thread_count_never_changes_results(self):
        base = MonteCarloConfig(pair_samples=100_000, seed=9, threads=1)
        multi = MonteCarloConfig(pair_samples=100_000, seed=9, threads=3)
        a, b = SetSpec.ball(1, 2), SetSpec.box([0.6, 0.6])
        r1 = restricted_sum_volume(a, b, ThetaSpec.complement_fraction(0.3), base)
        r2 = restricted_sum_volume(a, b, ThetaSpec.complement_fraction(0.3), multi)
        assert r1["theta_volume"].value == r2["theta_volume"].value
        assert r1["sum_volume"].value == r2["sum_volume"].value
        assert r1["theta_hits"] == r2["theta_hits"]

    def test_seed_reproducibility(self):
        r1 = restricted_sum_volume(SetSpec.ball(1, 2), SetSpec.ball(0.5, 2), ThetaSpec.full(), FAST)
        r2 = restricted_sum_volume(SetSpec.ball(1, 2), SetSpec.ball(0.5, 2), ThetaSpec.full(), FAST)
        assert r1["sum_volume"].value == r2["sum_volume"].value
        assert r1["theta_volume"].value == r2["theta_volume"].value

    def test_nested_thetas_monotone(self):
        # dropping more pairs can only shrink the observed sumset when the
        # kept subsets are nested, which a shared hash seed guarantees
        a, b = SetSpec.ball(1, 2), SetSpec.ball(0.7, 2)
        values = []
        for d in (0.0, 0.3, 0.6):
            rsv = restricted_sum_volume(a, b, ThetaSpec.complement_fraction(d), FAST)
            values.append(rsv["sum_volume"].value)
        assert values[0] >= values[1] >= values[2]

    def test_restricted_subset_of_full(self):
        a, b = SetSpec.box([1.0, 0.5]), SetSpec.ball(0.5, 2)
        full = restricted_sum_volume(a, b, ThetaSpec.full(), FAST)
        part = restricted_sum_volume(a, b, ThetaSpec.inner_product_leq(0.1), FAST)
        assert part["sum_volume"].value <= full["sum_volume"].value

    def test_brunn_minkowski_sanity(self):
        cfg = MonteCarloConfig(pair_samples=1_000_000, seed=11)
        a, b = SetSpec.ball(1, 2), SetSpec.ball(0.6, 2)
        rsv = restricted_sum_volume(a, b, ThetaSpec.full(), cfg)
        sv = rsv["sum_volume"]
        lhs = sv.value**0.5
        rhs = volume(a).value**0.5 + volume(b).value**0.5
        tol = 0.5 * sv.value ** (-0.5) * 3.0 * sv.stderr
        assert lhs >= rhs - tol

    def test_custom_theta_predicate(self):
        register_theta_predicate("first_coords_opposite", lambda x, y: x[:, 0] * y[:, 0] <= 0.0)
        rsv = restricted_sum_volume(
            SetSpec.ball(1, 2), SetSpec.ball(1, 2), ThetaSpec.custom("first_coords_opposite"), FAST
        )
        pair_vol = math.pi**2
        frac = rsv["theta_volume"].value / pair_vol
        assert abs(frac - 0.5) <= 3.0 * rsv["theta_volume"].stderr / pair_vol
        with pytest.raises(ParameterError):
            restricted_sum_volume(
                SetSpec.ball(1, 2), SetSpec.ball(1, 2), ThetaSpec.custom("never_registered"), FAST
            )


class TestTheoremTwelve:
    def test_cube_pair_exact_margin(self):
        # [-1,1]^3 + [-1,1]^3 = [-2,2]^3: lhs -> 64^(2/3) = 16, rhs = 8
        rep = check_theorem12(
            SetSpec.box([1, 1, 1]), SetSpec.box([1, 1, 1]), ThetaSpec.full(),
            MonteCarloConfig(pair_samples=400_000, seed=5),
        )
        assert rep.rhs == pytest.approx(8.0, abs=1e-12)
        assert rep.lhs <= 16.0 + 1e-9
        assert rep.deficit > 0
        assert rep.verdict == "holds"
        assert rep.context["gate"]["passed"]

    def test_ball_equality_deficit_within_ci(self):
        # equality configuration: the orthogonality constraint keeps half
        # the pairs, so the near-full gate fails and the verdict stays
        # inconclusive, but the measured deficit must straddle zero
        rep = check_theorem12(
            SetSpec.ball(1, 4), SetSpec.ball(0.7, 4), ThetaSpec.inner_product_leq(0.0),
            MonteCarloConfig(pair_samples=2_000_000, seed=5),
        )
        gate = rep.context["gate"]
        assert gate["fraction"] == 0.5
        assert gate["source"] == "by_construction"
        assert not gate["passed"]
        assert rep.verdict == "inconclusive"
        assert abs(rep.deficit) <= rep.ci_halfwidth

    def test_sum_norm_gate_via_cap_quadrature(self):
        # equality-radius sum-norm constraint on balls: the gate fraction
        # comes from the cap integral, and passes with the larger explicit
        # gate constant
        rep = check_theorem12(
            SetSpec.ball(1, 5), SetSpec.ball(0.5, 5), ThetaSpec.sum_norm_leq(math.sqrt(1.25)),
            MonteCarloConfig(pair_samples=1_000_000, seed=5, c=0.2),
        )
        gate = rep.context["gate"]
        assert gate["source"] == "quadrature"
        assert gate["passed"]
        assert 0.80 <= gate["fraction"] <= 0.82
        assert rep.verdict == "holds"

    def test_report_serializes(self):
        rep = check_theorem12(
            SetSpec.box([1, 1]), SetSpec.box([0.5, 0.5]), ThetaSpec.full(), FAST
        )
        blob = rep.to_json()
        assert blob["verdict"] == "holds"
        assert blob["context"]["n"] == 2


class TestCorollaryFifteen:
    def test_delta_zero_reduces_to_plain_rhs(self):
        a, b = SetSpec.ball(1, 3), SetSpec.ball(0.6, 3)
        r15 = check_corollary15(a, b, ThetaSpec.full(), 0.0, FAST)
        r12 = check_theorem12(a, b, ThetaSpec.full(), FAST)
        assert r15.rhs == r12.rhs

    def test_delta_range(self):
        with pytest.raises(ParameterError):
            check_corollary15(SetSpec.ball(1, 2), SetSpec.ball(1, 2), ThetaSpec.full(), 0.6, FAST)

    def test_tiny_summand_fubini_regime(self):
        rep = check_corollary15(
            SetSpec.ball(1, 3), SetSpec.ball(0.15, 3), ThetaSpec.full(), 0.05, FAST
        )
        assert rep.context["gate"]["passed"]
        assert rep.verdict == "holds"

    def test_random_complement_gate_by_construction(self):
        # dropping a 5% hash subset exactly meets the (1 - delta) gate
        rep = check_corollary15(
            SetSpec.ball(1, 4), SetSpec.ball(1, 4), ThetaSpec.complement_fraction(0.05), 0.05,
            MonteCarloConfig(pair_samples=1_000_000, seed=7),
        )
        gate = rep.context["gate"]
        assert gate["source"] == "by_construction"
        assert gate["fraction"] == 0.95
        assert gate["passed"]
        assert rep.verdict == "holds"


class TestFubini:
    def test_full_theta_simplifies_to_monotonicity(self):
        rep = fubini_lower_bound(SetSpec.ball(1, 3), SetSpec.ball(0.6, 3), ThetaSpec.full(), FAST)
        assert rep.context["delta"] == 0.0
        assert rep.verdict == "holds"

    def test_half_space_theta(self):
        rep = fubini_lower_bound(
            SetSpec.ball(1, 3), SetSpec.ball(0.8, 3), ThetaSpec.inner_product_leq(0.0), FAST
        )
        assert rep.context["delta"] == 0.5
        assert rep.verdict == "holds"

    def test_random_complement_on_boxes(self):
        rep = fubini_lower_bound(
            SetSpec.box([1, 1]), SetSpec.box([0.5, 0.5]), ThetaSpec.complement_fraction(0.2), FAST
        )
        assert rep.verdict == "holds"

    def test_requires_larger_first_argument(self):
        with pytest.raises(ParameterError):
            fubini_lower_bound(SetSpec.ball(0.5, 2), SetSpec.ball(1, 2), ThetaSpec.full(), FAST)


class TestSymmetrization:
    def test_balls_are_fixed_points(self):
        rep = bll_symmetrization_check(
            SetSpec.ball(1, 2), SetSpec.ball(0.7, 2), SetSpec.ball(1.2, 2), FAST
        )
        # rearranging balls reproduces the same configuration and seed,
        # hence bitwise equal sides
        assert rep.deficit == 0.0
        assert rep.verdict == "holds"

    def test_shifted_box_against_balls(self):
        rep = bll_symmetrization_check(
            SetSpec.box([0.5, 0.5], center=(0.3, 0.1)),
            SetSpec.ball(0.7, 2),
            SetSpec.ball(1.0, 2),
            MonteCarloConfig(pair_samples=1_000_000, seed=5),
        )
        assert rep.lhs <= rep.rhs + rep.ci_halfwidth
        assert rep.verdict in ("holds", "inconclusive")

    def test_inactive_constraint_gives_equality(self):
        rep = bll_symmetrization_check(
            SetSpec.ball(1, 2), SetSpec.ball(0.7, 2), SetSpec.ball(50.0, 2), FAST
        )
        pair_vol = math.pi * math.pi * 0.49
        assert rep.lhs == pytest.approx(pair_vol, rel=1e-12)
        assert rep.rhs == pytest.approx(pair_vol, rel=1e-12)

    def test_dimension_limit(self):
        with pytest.raises(ParameterError):
            bll_symmetrization_check(
                SetSpec.ball(1, 5), SetSpec.ball(1, 5), SetSpec.ball(1, 5), FAST
            )


class TestRemarkSixteen:
    def test_rhs_factor_monotone_in_gamma(self):
        factors = []
        for gamma in (0.2, 0.4, 0.6, 0.8, 0.95):
            rep = check_remark16(
                SetSpec.ball(1, 4), SetSpec.ball(0.7, 4), ThetaSpec.full(), gamma,
                MonteCarloConfig(pair_samples=50_000, seed=5),
            )
            factors.append(rep.context["rhs_factor"])
        assert all(a < b for a, b in zip(factors, factors[1:]))

    def test_ball_example_passes_weak_bound(self):
        rep = check_remark16(
            SetSpec.ball(1, 4), SetSpec.ball(0.7, 4), ThetaSpec.inner_product_leq(0.0), 0.5, FAST
        )
        assert rep.context["gate"]["passed"]
        assert rep.verdict == "holds"

    def test_sparse_random_theta_recorded(self):
        rep = check_remark16(
            SetSpec.ball(1, 3), SetSpec.ball(1, 3), ThetaSpec.complement_fraction(0.6), 0.4, FAST
        )
        assert rep.verdict in ("holds", "violated", "inconclusive")

    def test_gamma_range(self):
        with pytest.raises(ParameterError):
            check_remark16(SetSpec.ball(1, 2), SetSpec.ball(1, 2), ThetaSpec.full(), 1.0, FAST)


class TestCapFraction:
    def test_containment_branch_is_exact(self):
        # small r0 leaves the shifted ball inside the big one
        assert cap_fraction(3, 0.5, 0.05) == 1.0
        assert cap_fraction(2, 1.0, 0.3) == 1.0

    def test_normalization_identity(self):
        for n, rho, r0 in ((2, 1.0, 1.0), (4, 0.8, 0.95), (16, 0.3, 0.999)):
            _, info = cap_fraction(n, rho, r0, detail=True)
            assert info["identity_rel_err"] <= 1e-10

    def test_decreasing_in_r0(self):
        vals = [cap_fraction(2, 1.0, r) for r in (0.75, 0.9, 1.0)]
        assert vals[0] > vals[1] > vals[2]
        assert vals[0] == pytest.approx(0.8387462489649887, abs=1e-9)
        assert vals[2] == pytest.approx(0.6816901138162095, abs=1e-9)

    def test_first_integral_matches_betainc_oracle(self):
        # the plane-cut share of the small ball is a regularized
        # incomplete beta value; scipy computes it independently
        for n, rho, r0 in ((4, 0.8, 0.95), (7, 0.5, 0.99), (3, 0.3, 0.999)):
            _, info = cap_fraction(n, rho, r0, detail=True)
            v_s = info["s"] / rho
            oracle = betainc(0.5 * (n + 1), 0.5 * (n + 1), 0.5 * (1.0 + v_s))
            assert info["first_integral_fraction"] == pytest.approx(oracle, abs=1e-9)

    def test_matches_planar_monte_carlo(self):
        frac = cap_fraction(2, 1.0, 1.0)
        rng = np.random.default_rng(123)
        pts = rng.uniform(-1, 1, size=(1_000_000, 2))
        y = pts[(pts**2).sum(axis=1) <= 1.0]
        hit = ((y + np.array([1.0, 0.0])) ** 2).sum(axis=1) <= 2.0
        mc = hit.mean()
        sigma = math.sqrt(mc * (1 - mc) / len(y))
        assert abs(mc - frac) <= 3.0 * sigma

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            cap_fraction(1, 0.5, 0.5)
        with pytest.raises(ParameterError):
            cap_fraction(3, 1.5, 0.5)
        with pytest.raises(ParameterError):
            cap_fraction(3, 0.5, 0.0)

    def test_first_integral_trend_reaches_normal_cdf(self):
        target = normal_cdf(1.0)
        errs = []
        for n in (10, 100, 1000, 10000):
            errs.append(abs(first_integral_fraction_at_extremal_r0(n, 1.0) - target))
        assert errs[0] > errs[1] > errs[2] > errs[3]
        assert errs[3] <= 0.02


class TestLemmaThirteen:
    def test_planar_scan_value(self):
        out = check_lemma13(2, 1.0)
        assert out["c1_estimate"] == pytest.approx(0.16125375103501127, abs=1e-6)
        assert out["report"].verdict == "holds"
        assert out["report"].context["implied_c"] == pytest.approx(0.0907052, abs=1e-5)

    def test_uniform_lower_bound_small_rho(self):
        for n in (2, 8, 32, 128):
            out = check_lemma13(n, 0.1)
            assert out["c1_estimate"] > 0.05

    def test_scanned_fractions_never_exceed_one(self):
        tau = 0.5 * min(1.0 * math.sqrt(3), 1.0)
        for r0 in np.linspace(1.0 - tau / 3.0, 1.0, 9):
            assert cap_fraction(3, 1.0, float(r0)) <= 1.0

    def test_validation(self):
        with pytest.raises(ParameterError):
            check_lemma13(1, 0.5)
        with pytest.raises(ParameterError):
            check_lemma13(3, 0.5, grid_r0=1)


class TestBallExample:
    def test_equality_gap_zero(self):
        out = ball_example_exact(0.5, 3)
        assert abs(out["equality_gap"]) <= 1e-12
        assert out["theta_fraction"] == 0.5
        assert out["sum_radius"] == pytest.approx(math.sqrt(1.25), rel=1e-15)

    def test_fraction_independent_of_rho(self):
        for rho in (0.1, 0.5, 0.99):
            assert ball_example_exact(rho, 4)["theta_fraction"] == 0.5

    def test_one_dimension_still_exact(self):
        assert abs(ball_example_exact(0.9, 1)["equality_gap"]) <= 1e-12

    def test_validation(self):
        with pytest.raises(ParameterError):
            ball_example_exact(1.0, 3)
        with pytest.raises(ParameterError):
            ball_example_exact(0.5, 0)
