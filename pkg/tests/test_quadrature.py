import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levysup.quadrature import (
    IntegralResult,
    IntegrandNaNError,
    NonIntegrableError,
    QuadSpec,
    integrate_finite,
    integrate_power_endpoint,
    integrate_semi_infinite,
)
from tests.oracle_values import DAMPED_COSINE_TRAPEZOID


class TestQuadSpec:
    def test_defaults(self):
        spec = QuadSpec()
        assert (spec.abs_tol, spec.rel_tol, spec.max_subdivisions) == (1e-10, 1e-8, 2000)

    @pytest.mark.parametrize("kwargs", [
        {"abs_tol": -1.0},
        {"rel_tol": -1e-3},
        {"abs_tol": 0.0, "rel_tol": 0.0},
        {"max_subdivisions": 0},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            QuadSpec(**kwargs)


class TestFinite:
    def test_constant(self):
        res = integrate_finite(lambda x: 1.0, 0.0, 1.0)
        assert abs(res.value - 1.0) <= 1e-12
        assert res.error_estimate <= 1e-12

    def test_inverse_sqrt_endpoint(self):
        # The default tolerance stops at ~1e-8 absolute error on this
        # singular integrand, so the 1e-8 target needs a tighter request.
        res = integrate_finite(lambda x: x ** -0.5, 0.0, 1.0, QuadSpec(1e-10, 1e-10, 4000))
        assert abs(res.value - 2.0) < 1e-8

    def test_never_touches_endpoints(self):
        seen = []

        def f(x):
            seen.append(x)
            return 1.0 / math.sqrt(x * (1.0 - x))

        integrate_finite(f, 0.0, 1.0)
        assert 0.0 not in seen and 1.0 not in seen

    def test_gaussian(self):
        res = integrate_finite(lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi), -8, 8, vectorized=True)
        assert abs(res.value - 1.0) < 1e-10
        assert res.converged

    def test_converged_error_within_tolerance(self):
        spec = QuadSpec(1e-11, 1e-9)
        res = integrate_finite(np.sin, 0.0, 3.0, spec, vectorized=True)
        assert res.converged and res.error_estimate <= spec.tolerance(res.value)

    def test_nan_reports_abscissa(self):
        with pytest.raises(IntegrandNaNError) as info:
            integrate_finite(lambda x: float("nan") if x > 0.5 else 1.0, 0.0, 1.0)
        assert info.value.abscissa > 0.5

    def test_nonconvergence_is_soft(self):
        res = integrate_finite(lambda x: math.sin(1.0 / x) / x, 0.0, 1.0, QuadSpec(1e-14, 1e-14, 5))
        assert not res.converged

    def test_empty_and_reversed(self):
        assert integrate_finite(lambda x: 1.0, 2.0, 2.0).value == 0.0
        with pytest.raises(ValueError):
            integrate_finite(lambda x: 1.0, 1.0, 0.0)

    def test_vector_valued(self):
        res = integrate_finite(lambda x: np.stack([x, x ** 2], axis=1), 0.0, 1.0, vectorized=True)
        np.testing.assert_allclose(res.value, [0.5, 1.0 / 3.0], rtol=1e-12)

    def test_breaks(self):
        res = integrate_finite(lambda x: np.abs(x - 0.3), 0.0, 1.0, vectorized=True, breaks=[0.3])
        assert abs(res.value - (0.3 ** 2 + 0.7 ** 2) / 2) < 1e-14

    def test_result_arithmetic(self):
        a = IntegralResult(1.0, 0.1, 15, True)
        b = IntegralResult(2.0, 0.2, 30, False)
        s = a + b
        assert (s.value, s.evaluations, s.converged) == (3.0, 45, False)
        assert s.error_estimate == pytest.approx(0.3)
        assert a.scaled(-2.0).error_estimate == pytest.approx(0.2)


class TestSemiInfinite:
    def test_exponential(self):
        res = integrate_semi_infinite(lambda x: np.exp(-x), 0.0, vectorized=True)
        assert abs(res.value - 1.0) < 1e-10

    def test_half_gaussian(self):
        res = integrate_semi_infinite(lambda x: np.exp(-x * x), 0.0, vectorized=True)
        assert abs(res.value - math.sqrt(math.pi) / 2) < 1e-10

    def test_damped_cosine_against_trapezoid(self):
        res = integrate_semi_infinite(lambda t: np.exp(-t ** 1.5) * np.cos(t), 0.0, QuadSpec(1e-12, 1e-10),
                                      vectorized=True, envelope=lambda t: math.exp(-t ** 1.5), segment=math.pi)
        assert res.converged
        assert abs(res.value - DAMPED_COSINE_TRAPEZOID) < 1e-8

    def test_unreachable_envelope(self):
        res = integrate_semi_infinite(lambda t: np.cos(t) / (1 + t), 0.0, vectorized=True,
                                      envelope=lambda t: 1.0 / (1.0 + t), segment=1.0, max_segments=50)
        assert not res.converged

    def test_oscillatory_needs_segment(self):
        with pytest.raises(ValueError):
            integrate_semi_infinite(np.cos, 0.0, envelope=lambda t: 1.0)


class TestPowerEndpoint:
    def test_inverse_sqrt(self):
        res = integrate_power_endpoint(lambda x: np.ones_like(x), 0.0, 1.0, -0.5, 0.0, vectorized=True)
        assert abs(res.value - 2.0) < 1e-10

    def test_beta_kernel(self):
        a = 1.5
        res = integrate_power_endpoint(lambda x: np.ones_like(x), 0.0, 1.0, -1 / a, 1 / a - 1, vectorized=True)
        assert abs(res.value - 2 * math.pi / math.sqrt(3)) < 1e-9

    @pytest.mark.parametrize("p", [(-1.0, 0.0), (0.0, -1.5)])
    def test_rejects_non_integrable(self, p):
        with pytest.raises(NonIntegrableError):
            integrate_power_endpoint(lambda x: 1.0, 0.0, 1.0, *p)

    def test_agrees_with_plain_path_on_smooth(self):
        f = lambda x: np.exp(np.sin(3 * x))
        a = integrate_power_endpoint(f, -1.0, 2.0, 0.0, 0.0, vectorized=True).value
        b = integrate_finite(f, -1.0, 2.0, vectorized=True).value
        assert abs(a - b) < 1e-10

    def test_supremum_integrand_against_clipped_plain_path(self):
        # alpha = 1.5 finite-horizon integrand on [0, 1]; the plain path stops
        # a hair short of the singular end and adds the analytic end piece.
        from levysup.models import StableDrift
        from levysup.stable import StableParams

        m = StableDrift(StableParams(1.5), 0.0)
        g = lambda s: m.neg_part_mean_ratio(1.0 - s) * m.density(1.0, s)
        smooth = lambda s: g(s) * (1.0 - s) ** (1.0 - 1.0 / 1.5)
        a = integrate_power_endpoint(smooth, 0.0, 1.0, 0.0, 1.0 / 1.5 - 1.0, QuadSpec(1e-12, 1e-11),
                                     vectorized=True).value
        eps = 1e-9
        plain = integrate_finite(g, 0.0, 1.0 - eps, QuadSpec(1e-12, 1e-11, 8000), vectorized=True).value
        # Near s=1 the integrand is g(1) (1-s)^(-1/3) to leading order.
        end = float(smooth(np.array([1.0 - eps]))[0]) * 1.5 * eps ** (1.0 / 1.5)
        assert abs(a - (plain + end)) < 1e-6


smooth_coeffs = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


def _poly_exp(c):
    return lambda x: (c[0] + c[1] * x + c[2] * np.cos(3 * x)) * np.exp(-x * x / 4)


class TestProperties:
    @settings(max_examples=25, deadline=None)
    @given(smooth_coeffs, st.floats(-10, 10))
    def test_linearity(self, c, k):
        f = _poly_exp(c)
        r1 = integrate_finite(f, -2.0, 3.0, vectorized=True)
        r2 = integrate_finite(lambda x: k * f(x), -2.0, 3.0, vectorized=True)
        assert abs(r2.value - k * r1.value) <= abs(k) * r1.error_estimate + r2.error_estimate + 1e-13

    @settings(max_examples=25, deadline=None)
    @given(smooth_coeffs, st.floats(-1.9, 2.9))
    def test_additivity(self, c, m):
        f = _poly_exp(c)
        whole = integrate_finite(f, -2.0, 3.0, vectorized=True)
        left = integrate_finite(f, -2.0, m, vectorized=True)
        right = integrate_finite(f, m, 3.0, vectorized=True)
        bound = whole.error_estimate + left.error_estimate + right.error_estimate + 1e-13
        assert abs(whole.value - left.value - right.value) <= bound

    @settings(max_examples=20, deadline=None)
    @given(smooth_coeffs)
    def test_against_fine_grid(self, c):
        f = _poly_exp(c)
        res = integrate_finite(f, -2.0, 3.0, vectorized=True)
        x = np.linspace(-2.0, 3.0, 2_000_001)
        brute = np.trapezoid(f(x), x)
        # The trapezoid itself carries ~1e-12 discretization error.
        assert res.converged
        assert abs(res.value - brute) <= 3 * res.error_estimate + 1e-11
