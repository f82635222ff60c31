import math

import numpy as np
import pytest
from scipy import special

from levysup.formulas import (
    EXACT,
    JointDensityPoint,
    ProbabilityEstimate,
    joint_inf_terminal_density,
    joint_point,
    kendall_first_passage_cdf,
    spectrally_negative_sup,
    sup_finite,
    sup_infinite,
    sup_infinite_stable_ml,
    takacs_finite,
    takacs_infinite,
    takacs_negative,
)
from levysup.models import (
    BrownianDrift,
    CompoundPoissonDrift,
    PerturbedCompoundPoisson,
    SpectrallyNegativeStable,
    StableDrift,
)
from levysup.quadrature import QuadSpec, integrate_finite, integrate_semi_infinite
from levysup.stable import StableParams, stable_tail
from levysup.verify import exponential_ruin
from tests.oracle_values import ZERO_DRIFT_SUP_1

CENTERED = StableDrift(StableParams(1.5), 0.0)
DRIFTED = StableDrift(StableParams(1.5), 1.0)
WIENER = BrownianDrift(1.0, 0.0)
SN = SpectrallyNegativeStable(StableParams(1.5, -1.0))
REFLECTION_1 = 2 * special.ndtr(-1.0)


class TestProbabilityEstimate:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ProbabilityEstimate(1.1, 0.0, "quadrature")

    def test_exact_has_no_error(self):
        with pytest.raises(ValueError):
            ProbabilityEstimate(0.5, 1e-3, EXACT)

    def test_joint_point_invariants(self):
        with pytest.raises(ValueError):
            JointDensityPoint(0.0, 1.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            JointDensityPoint(1.0, 1.0, 1.0, -0.1)


class TestSupFinite:
    def test_zero_drift_against_independent_route(self):
        assert abs(sup_finite(CENTERED, 1.0, 1.0).value - ZERO_DRIFT_SUP_1) < 2e-6

    def test_brownian_reflection(self):
        assert abs(sup_finite(WIENER, 1.0, 1.0).value - REFLECTION_1) < 1e-5

    def test_alpha_two_is_variance_two_brownian(self):
        m = StableDrift(StableParams(2.0), 0.0)
        assert abs(sup_finite(m, 1.0, 1.0).value - 2 * special.ndtr(-1 / math.sqrt(2))) < 1e-5

    def test_large_level_is_single_jump(self):
        # For upward jumps the supremum beyond a high level is driven by one
        # big jump, so it matches the terminal tail rather than alpha times it.
        r = sup_finite(CENTERED, 1e3, 1.0)
        tail = stable_tail(1e3, StableParams(1.5))
        assert r.value <= 2e-3
        assert r.value == pytest.approx(tail, rel=1e-2)

    def test_at_least_terminal_tail(self):
        for m in (CENTERED, DRIFTED, BrownianDrift(1.0, 1.0)):
            for u in (0.3, 1.0, 4.0):
                r = sup_finite(m, u, 2.0)
                assert r.value >= float(m.tail(u, 2.0)) - r.error_estimate

    @pytest.mark.parametrize("m", [CENTERED, DRIFTED, BrownianDrift(1.0, 0.5)], ids=["stable", "drift", "wiener"])
    def test_monotone_grid(self, m):
        us = [0.25, 0.5, 1.0, 2.0, 4.0]
        ts = [0.25, 0.5, 1.0, 2.0, 4.0]
        grid = [[sup_finite(m, u, t) for t in ts] for u in us]
        for i in range(5):
            for j in range(5):
                a = grid[i][j]
                if j + 1 < 5:
                    b = grid[i][j + 1]
                    assert b.value >= a.value - 2 * (a.error_estimate + b.error_estimate)
                if i + 1 < 5:
                    b = grid[i + 1][j]
                    assert b.value <= a.value + 2 * (a.error_estimate + b.error_estimate)
                assert 0.0 <= a.value <= 1.0

    def test_self_similarity(self):
        a = sup_finite(CENTERED, 1.0, 8.0).value
        b = sup_finite(CENTERED, 8.0 ** (-1 / 1.5), 1.0).value
        assert abs(a - b) < 1e-8

    def test_compound_poisson_trend(self):
        # Drift-compensated exponential jumps with lam = mu^2 and c = mu have
        # mean zero and variance rate 2; the supremum law approaches the
        # alpha=2 stable one as mu grows.
        target = sup_finite(StableDrift(StableParams(2.0), 0.0), 1.0, 1.0).value
        gaps = [abs(takacs_finite(CompoundPoissonDrift(mu * mu, mu, mu), 1.0, 1.0).value - target)
                for mu in (2.0, 4.0, 8.0)]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_rejects_finite_variation(self):
        with pytest.raises(TypeError, match="takacs"):
            sup_finite(CompoundPoissonDrift(1.0, 1.0, 2.0), 1.0, 1.0)
        with pytest.raises(TypeError):
            sup_finite(SN, 1.0, 1.0)

    def test_rejects_bad_level(self):
        with pytest.raises(ValueError):
            sup_finite(CENTERED, 0.0, 1.0)


class TestSupInfinite:
    @pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
    def test_wiener(self, u, c):
        assert abs(sup_infinite(BrownianDrift(1.0, c), u).value - math.exp(-2 * u * c)) < 1e-6

    @pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
    @pytest.mark.parametrize("u", [0.5, 2.0])
    def test_mittag_leffler_route(self, alpha, u):
        quad = sup_infinite(StableDrift(StableParams(alpha), 1.0), u).value
        series = sup_infinite_stable_ml(alpha, 1.0, u).value
        assert quad == pytest.approx(series, rel=1e-4)

    def test_sigma_scaling(self):
        m = StableDrift(StableParams(1.5, 1.0, 2.0), 1.0)
        assert sup_infinite(m, 1.0).value == pytest.approx(sup_infinite_stable_ml(1.5, 1.0, 1.0, 2.0).value, rel=1e-4)

    def test_zero_drift_is_certain(self):
        r = sup_infinite(CENTERED, 1.0)
        assert r.value == 1.0 and r.method == EXACT and r.error_estimate == 0.0

    def test_perturbed_exceeds_its_stable_part(self):
        # Adding upward jumps to the same net drift raises the supremum.
        p = PerturbedCompoundPoisson(1.0, 2.0, 1.0, StableParams(1.5))
        value = sup_infinite(p, 1.0).value
        assert sup_infinite(StableDrift(StableParams(1.5), 0.5), 1.0).value < value < 1.0

    def test_decreasing_in_level(self):
        values = [sup_infinite(DRIFTED, u).value for u in (0.25, 0.5, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestMittagLefflerForm:
    def test_small_level(self):
        assert sup_infinite_stable_ml(1.5, 1.0, 1e-12).value == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
    def test_alpha_two(self, c, u):
        assert abs(sup_infinite_stable_ml(2.0, c, u).value - math.exp(-c * u)) < 1e-8

    def test_rejects(self):
        with pytest.raises(ValueError):
            sup_infinite_stable_ml(1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            sup_infinite_stable_ml(1.5, 0.0, 1.0)


class TestTakacs:
    @pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
    def test_infinite_against_ruin_formula(self, u):
        assert abs(takacs_infinite(CompoundPoissonDrift(1.0, 1.0, 2.0), u).value - exponential_ruin(1.0, 1.0, 2.0, u)) < 1e-6

    def test_ruin_oracle_value(self):
        assert exponential_ruin(1.0, 1.0, 2.0, 1.0) == pytest.approx(0.5 * math.exp(-0.5), rel=1e-15)

    def test_critical_is_certain(self):
        r = takacs_infinite(CompoundPoissonDrift(2.0, 1.0, 2.0), 1.0)
        assert r.value == 1.0 and r.method == EXACT

    def test_small_level(self):
        assert abs(takacs_infinite(CompoundPoissonDrift(1.0, 1.0, 2.0), 1e-8).value - 0.5) < 1e-4

    def test_short_horizon(self):
        assert takacs_finite(CompoundPoissonDrift(1.0, 2.0, 1.0), 1.0, 1e-6).value < 2e-6

    def test_high_level(self):
        assert takacs_finite(CompoundPoissonDrift(1.0, 1.0, 2.0), 200.0, 5.0).value < 1e-12

    def test_finite_approaches_infinite(self):
        m = CompoundPoissonDrift(1.0, 1.0, 2.0)
        values = [takacs_finite(m, 1.0, t).value for t in (1.0, 5.0, 25.0, 100.0)]
        assert all(a <= b + 1e-9 for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(takacs_infinite(m, 1.0).value, abs=1e-6)

    def test_requires_compound_poisson(self):
        with pytest.raises(TypeError):
            takacs_finite(CENTERED, 1.0, 1.0)


class TestKendall:
    def test_brownian_reflection(self):
        assert abs(kendall_first_passage_cdf(WIENER, 1.0, 1.0).value - REFLECTION_1) < 1e-5

    def test_monotone(self):
        a = kendall_first_passage_cdf(SN, 1.0, 1.0).value
        b = kendall_first_passage_cdf(SN, 1.0, 4.0).value
        assert a <= b <= 1.0

    def test_spectrally_negative_closing_identity(self):
        # The passage of the upward-creeping process above z by T is the
        # event that its supremum exceeds z.
        assert kendall_first_passage_cdf(SN, 1.0, 1.0).value == pytest.approx(
            spectrally_negative_sup(1.5, 1.0, 1.0, 1.0).value, abs=1e-6)

    def test_reflected_stable_drift(self):
        # Y = -X for X = Z - ct: Y passes z when the inverted process does.
        m = StableDrift(StableParams(1.5), 0.5)
        value = kendall_first_passage_cdf(m, 1.0, 2.0).value
        assert 0.0 < value < 1.0

    @pytest.mark.parametrize("z", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("T", [0.5, 3.0])
    def test_series_route_matches(self, z, T):
        m = CompoundPoissonDrift(1.0, 1.0, 2.0)
        assert abs(takacs_negative(m, z, T).value - kendall_first_passage_cdf(m, z, T).value) < 1e-6

    def test_compound_poisson_before_atom(self):
        # c t - J(t) <= c t < z before t = z/c, so nothing has passed yet.
        assert kendall_first_passage_cdf(CompoundPoissonDrift(1.0, 1.0, 2.0), 4.0, 1.9).value == 0.0


class TestJoint:
    def test_brownian_closed_form(self):
        # P(min W < -x, W(T) + x in dz) = phi_T(x + z) by reflection.
        value = joint_inf_terminal_density(WIENER, 1.0, 1.0, 1.0)
        assert abs(value - math.exp(-2.0) / math.sqrt(2 * math.pi)) < 1e-5

    def test_small_offset_limit(self):
        # The z factor is cancelled by the first-passage kernel piling up near
        # s=T, so the density tends to p_X(x, T) rather than zero.
        limit = CENTERED.density(1.0, 1.0)
        gaps = [abs(joint_inf_terminal_density(CENTERED, 1.0, z, 1.0) - limit) for z in (1e-2, 1e-3, 1e-4)]
        assert gaps[2] < 1e-5
        assert gaps[0] > gaps[1] > gaps[2]

    @pytest.mark.parametrize("z", [1e-3, 0.5, 2.0])
    def test_brownian_closed_form_in_offset(self, z):
        value = joint_inf_terminal_density(WIENER, 1.0, z, 1.0)
        assert abs(value - math.exp(-(1 + z) ** 2 / 2) / math.sqrt(2 * math.pi)) < 1e-9

    def test_vectorized(self):
        z = np.array([0.2, 1.0, 3.0])
        out = joint_inf_terminal_density(CENTERED, 1.0, z, 1.0)
        np.testing.assert_allclose(out, [joint_inf_terminal_density(CENTERED, 1.0, zi, 1.0) for zi in z], rtol=1e-7)

    def test_proof_step_identity(self):
        # P(sup X > x) = P(X(T) > x) + int_0^inf joint dz with Y = -X.
        spec = QuadSpec(1e-10, 1e-9)
        f = lambda z: joint_inf_terminal_density(CENTERED, 1.0, z, 1.0)
        core = integrate_finite(f, 0.0, 20.0, spec, vectorized=True, breaks=[0.5, 1.0, 2.0, 5.0]).value
        rest = integrate_semi_infinite(lambda z: f(z + 20.0), 0.0, spec, vectorized=True).value
        total = CENTERED.tail(1.0, 1.0) + core + rest
        assert abs(total - sup_finite(CENTERED, 1.0, 1.0).value) < 3e-5

    def test_point(self):
        p = joint_point(WIENER, 1.0, 1.0, 1.0)
        assert p.density > 0 and p.t_horizon == 1.0

    def test_rejects(self):
        with pytest.raises(ValueError):
            joint_inf_terminal_density(CENTERED, 1.0, 0.0, 1.0)
        with pytest.raises(TypeError):
            joint_inf_terminal_density(CompoundPoissonDrift(1.0, 1.0, 2.0), 1.0, 1.0, 1.0)


class TestSpectrallyNegative:
    def test_level_zero(self):
        r = spectrally_negative_sup(1.5, 1.0, 0.0, 1.0)
        assert abs(r.value - 1.0) < 1e-9 and r.method == EXACT

    @pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
    def test_alpha_two(self, u):
        assert spectrally_negative_sup(2.0, 1.3, u, 2.0).value == pytest.approx(
            2 * special.ndtr(-u / (1.3 * math.sqrt(4.0))), abs=1e-12)

    def test_decreasing(self):
        values = [spectrally_negative_sup(1.5, 1.0, u, 1.0).value for u in (0.0, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_rejects_negative_level(self):
        with pytest.raises(ValueError):
            spectrally_negative_sup(1.5, 1.0, -1.0, 1.0)
