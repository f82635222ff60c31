"""Supremum, first-passage and joint laws as integrals over model quantities.

Every probability is returned as a ProbabilityEstimate carrying the
aggregated error estimate of the integrals it was built from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import (
    BrownianDrift,
    CompoundPoissonDrift,
    LevyModel,
    PerturbedCompoundPoisson,
    SpectrallyNegativeStable,
    StableDrift,
    jumpsum_cdf_complement,
    jumpsum_density,
    jumpsum_density_series,
)
from .quadrature import (
    IntegralResult,
    QuadSpec,
    integrate_finite,
    integrate_power_endpoint,
    integrate_semi_infinite,
)
from .stable import StableParams, mittag_leffler, stable_tail

FORMULA_SPEC = QuadSpec(abs_tol=1e-10, rel_tol=1e-9, max_subdivisions=4000)

EXACT = "exact-closed-form"
QUADRATURE = "quadrature"
SERIES = "series"


class NumericalError(ArithmeticError):
    """A quadrature behind a formula did not reach its tolerance."""


@dataclass(frozen=True)
class ProbabilityEstimate:
    value: float
    error_estimate: float
    method: str
    detail: str = ""

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"probability out of range: {self.value}")
        if self.error_estimate < 0:
            raise ValueError("error estimate must be non-negative")
        if self.method == EXACT and self.error_estimate != 0.0:
            raise ValueError("closed forms carry no error estimate")


@dataclass(frozen=True)
class JointDensityPoint:
    x: float
    z: float
    t_horizon: float
    density: float

    def __post_init__(self):
        if self.x <= 0 or self.z <= 0 or self.t_horizon <= 0:
            raise ValueError("x, z and t_horizon must be positive")
        if self.density < 0:
            raise ValueError("density must be non-negative")


def _estimate(raw: float, err: float, method: str, detail: str = "") -> ProbabilityEstimate:
    # Clamp into [0, 1]; the excursion is added to the error.
    value = min(max(raw, 0.0), 1.0)
    return ProbabilityEstimate(value, float(err) + abs(raw - value), method, detail)


def _exact(value: float, detail: str = "") -> ProbabilityEstimate:
    return ProbabilityEstimate(float(value), 0.0, EXACT, detail)


def _require(res: IntegralResult, what: str) -> IntegralResult:
    if not res.converged:
        raise NumericalError(f"{what} did not converge (estimate {res.value!r}, error {res.error_estimate!r})")
    return res


def _positive(name: str, value: float):
    if not value > 0 or not math.isfinite(value):
        raise ValueError(f"{name} must be positive and finite, got {value}")


def _geometric(a: float, b: float, scale: float, count: int = 12):
    """Breakpoints packed towards a, at a + scale * 4^k."""
    pts = [a + scale * 4.0 ** k for k in range(-count // 2, count)]
    return [p for p in pts if a < p < b]


def _integrate_with_exponents(g, a: float, b: float, p_left: float, p_right: float,
                              spec: QuadSpec, scale: float) -> IntegralResult:
    """Integrate g over [a, b], with g ~ (s-a)^p_left at a and (b-s)^p_right at b.

    The end pieces go through the power substitution; the interior is
    adaptive with geometric breaks at `scale` from either end.
    """
    width = b - a
    edge = min(width / 4.0, max(scale, width * 1e-6))
    part = QuadSpec(spec.abs_tol / 3, spec.rel_tol, spec.max_subdivisions)

    def weighted(s, w):
        # Substituted nodes within an ulp of an endpoint round onto it; their
        # share of the integral is below rounding, so they contribute zero.
        inside = (s > a) & (s < b)
        y = np.asarray(g(s[inside]), dtype=float)
        out = np.zeros((s.size,) + y.shape[1:])
        out[inside] = y * w[inside].reshape((-1,) + (1,) * (y.ndim - 1))
        return out

    def left_smooth(s):
        return weighted(s, (s - a) ** (-p_left))

    def right_smooth(s):
        return weighted(s, (b - s) ** (-p_right))

    left = integrate_power_endpoint(left_smooth, a, a + edge, p_left, 0.0, part, vectorized=True)
    right = integrate_power_endpoint(right_smooth, b - edge, b, 0.0, p_right, part, vectorized=True)
    lo, hi = a + edge, b - edge
    breaks = _geometric(lo, hi, edge) + [hi - d + lo for d in _geometric(lo, hi, edge)]
    middle = integrate_finite(g, lo, hi, part, vectorized=True, breaks=breaks)
    return left + middle + right


def _check_sup_model(m: LevyModel):
    if isinstance(m, CompoundPoissonDrift):
        raise TypeError("finite-variation model: use takacs_finite / takacs_infinite")
    if isinstance(m, SpectrallyNegativeStable):
        raise TypeError("spectrally negative model: use spectrally_negative_sup")
    if not isinstance(m, (StableDrift, BrownianDrift, PerturbedCompoundPoisson)):
        raise TypeError(f"unsupported model {type(m).__name__}")


def _kernel_exponents(m: LevyModel):
    if isinstance(m, BrownianDrift):
        return -0.5, -0.5
    if isinstance(m, PerturbedCompoundPoisson) or isinstance(m, StableDrift):
        a = m.params.alpha
        if a == 2.0:
            return -0.5, -0.5
        return -1.0 / a, 1.0 / a - 1.0
    raise TypeError(f"no kernel exponents for {type(m).__name__}")


def _time_scale(m: LevyModel, u: float) -> float:
    """Time at which the unit-scale fluctuation reaches level u."""
    if isinstance(m, BrownianDrift):
        return (u / m.vol) ** 2
    a = m.params.alpha
    return (u / m.params.sigma) ** a


def sup_finite(m: LevyModel, u: float, T: float, spec: QuadSpec = FORMULA_SPEC) -> ProbabilityEstimate:
    """P(sup_{t<=T} X(t) > u) = P(X(T) > u) + int_0^T E(X(T-s))^-/(T-s) f(u, s) ds."""
    _check_sup_model(m)
    _positive("u", u)
    _positive("T", T)
    tail = float(m.tail(u, T))
    p_left, p_right = _kernel_exponents(m)

    def g(s):
        s = np.asarray(s, dtype=float)
        return m.neg_part_mean_ratio(T - s) * m.density(u, s)

    res = _require(_integrate_with_exponents(g, 0.0, T, p_left, p_right, spec,
                                             min(_time_scale(m, u), T / 4)),
                   "finite-horizon supremum integral")
    return _estimate(tail + res.value, res.error_estimate + 1e-12, QUADRATURE,
                     f"tail={tail!r}; integral={res.value!r}+-{res.error_estimate:.3g} "
                     f"({res.evaluations} evaluations)")


def _density_tail_integral(m: LevyModel, u: float, s_star: float, spec: QuadSpec) -> IntegralResult:
    """int_{s*}^inf f(u, s) ds through s = s*/v. The integrand decays like
    s^(-alpha) for stable families, giving v^(alpha-2) at v=0."""
    a = 2.0 if isinstance(m, BrownianDrift) else m.params.alpha
    p = a - 2.0

    def smooth(v):
        v = np.asarray(v, dtype=float)
        s = s_star / v
        with np.errstate(over="ignore", under="ignore"):
            out = m.density(u, s) * s_star / v ** 2 * v ** (-p)
        return np.where(np.isfinite(out), out, 0.0)

    return integrate_power_endpoint(smooth, 0.0, 1.0, p, 0.0, spec, vectorized=True)


def sup_infinite(m: LevyModel, u: float, spec: QuadSpec = FORMULA_SPEC) -> ProbabilityEstimate:
    """P(sup_t X(t) > u) = |E X(1)| int_0^inf f(u, s) ds; 1 when E X(1) >= 0."""
    _check_sup_model(m)
    _positive("u", u)
    rate = m.mean_rate
    if rate >= 0:
        return _exact(1.0, "non-negative mean: the supremum is infinite")
    p_left = _kernel_exponents(m)[0]
    s0 = _time_scale(m, u)
    s_star = 64.0 * max(s0, u / abs(rate), 1.0 / rate ** 2)
    part = QuadSpec(spec.abs_tol / 3, spec.rel_tol, spec.max_subdivisions)

    def g(s):
        return m.density(u, np.asarray(s, dtype=float))

    first = min(s0, s_star / 4)
    head = integrate_power_endpoint(lambda s: g(s) * s ** (-p_left), 0.0, first, p_left, 0.0,
                                    part, vectorized=True)
    body = integrate_finite(g, first, s_star, part, vectorized=True,
                            breaks=_geometric(first, s_star, first) + [u / abs(rate)])
    tail = _density_tail_integral(m, u, s_star, part)
    res = _require(head + body + tail, "infinite-horizon density integral")
    return _estimate(abs(rate) * res.value, abs(rate) * res.error_estimate + 1e-12, QUADRATURE,
                     f"integral={res.value!r}+-{res.error_estimate:.3g}; split at {first!r}, {s_star!r}")


def sup_infinite_stable_ml(alpha: float, c: float, u: float, sigma: float = 1.0) -> ProbabilityEstimate:
    """Mittag-Leffler closed form E_{alpha-1}(-a u^(alpha-1)), a = c cos(pi(alpha-2)/2) / sigma^alpha."""
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    _positive("c", c)
    _positive("u", u)
    _positive("sigma", sigma)
    a = c * math.cos(math.pi * (alpha - 2.0) / 2.0) / sigma ** alpha
    value = mittag_leffler(alpha - 1.0, -a * u ** (alpha - 1.0))
    return _estimate(value, 1e-14 * max(abs(value), 1e-300) if alpha < 2 else 0.0, SERIES,
                     f"E_{alpha - 1.0!r}({-a * u ** (alpha - 1.0)!r})")


def _check_cp(m: LevyModel):
    if not isinstance(m, CompoundPoissonDrift):
        raise TypeError("Takacs formulas need a CompoundPoissonDrift model")


def takacs_finite(m: CompoundPoissonDrift, u: float, T: float,
                  spec: QuadSpec = FORMULA_SPEC) -> ProbabilityEstimate:
    """P(sup_{t<=T} J(t) - c t > u) for exponential jumps, through the jump-sum density."""
    _check_cp(m)
    _positive("u", u)
    _positive("T", T)
    tail = float(jumpsum_cdf_complement(u + m.c * T, T, m.lam, m.mu_rate))

    def g(s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        for i, si in enumerate(s):
            out[i] = jumpsum_density(u + m.c * si, si, m.lam, m.mu_rate)
        return m.neg_part_mean_ratio(T - s) * out

    scale = min(T / 4, max(1.0 / m.lam, u / m.c))
    res = _require(integrate_finite(g, 0.0, T, spec, vectorized=True,
                                    breaks=_geometric(0.0, T, scale)),
                   "finite-horizon Takacs integral")
    return _estimate(tail + res.value, res.error_estimate + 1e-12, QUADRATURE,
                     f"tail={tail!r}; integral={res.value!r}+-{res.error_estimate:.3g}")


def takacs_infinite(m: CompoundPoissonDrift, u: float, spec: QuadSpec = FORMULA_SPEC) -> ProbabilityEstimate:
    """(c - E J(1)) int_0^inf h(u + c s, s) ds, h the jump-sum density; 1 when E J(1) >= c."""
    _check_cp(m)
    _positive("u", u)
    net = m.c - m.lam / m.mu_rate
    if net <= 0:
        return _exact(1.0, "jump mean rate at least the drift")

    def g(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for i, si in enumerate(s):
            if si > 0:
                out[i] = jumpsum_density(u + m.c * si, si, m.lam, m.mu_rate)
        return out

    res = _require(integrate_semi_infinite(g, 0.0, spec, vectorized=True),
                   "infinite-horizon Takacs integral")
    return _estimate(net * res.value, net * res.error_estimate + 1e-12, QUADRATURE,
                     f"integral={res.value!r}+-{res.error_estimate:.3g}")


def _cp_passage(m: CompoundPoissonDrift, z: float, T: float, density, spec: QuadSpec):
    # Y(t) = c t - J(t) sits at z either with no jump at t = z/c (an atom,
    # contributing e^{-lam z/c}) or through the jump sum J(t) = c t - z.
    t0 = z / m.c
    if t0 >= T:
        return 0.0, 0.0
    atom = math.exp(-m.lam * t0)

    def g(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            out[i] = density(m.c * ti - z, ti, m.lam, m.mu_rate)
        return z / t * out

    res = _require(integrate_finite(g, t0, T, spec, vectorized=True,
                                    breaks=_geometric(t0, T, max(t0, 1.0 / m.lam) / 4)),
                   "first-passage integral")
    return atom + res.value, res.error_estimate


def takacs_negative(m: CompoundPoissonDrift, u: float, T: float,
                    spec: QuadSpec = FORMULA_SPEC) -> ProbabilityEstimate:
    """u int_0^T s^-1 d_s P(c s - J(s) <= u): the first time c t - J(t) exceeds u,
    with the jump-sum law taken as its Poisson-Gamma series."""
    _check_cp(m)
    _positive("u", u)
    _positive("T", T)
    value, err = _cp_passage(m, u, T, jumpsum_density_series, spec)
    return _estimate(value, err + 1e-12, QUADRATURE, "Poisson-Gamma series route")


def kendall_first_passage_cdf(m: LevyModel, z: float, T: float,
                              spec: QuadSpec = FORMULA_SPEC) -> ProbabilityEstimate:
    """P(S(z) <= T) = int_0^T (z/t) p_Y(z, t) dt for the spectrally negative Y."""
    _positive("z", z)
    _positive("T", T)
    if isinstance(m, CompoundPoissonDrift):
        value, err = _cp_passage(m, z, T, jumpsum_density, spec)
        return _estimate(value, err + 1e-12, QUADRATURE, "atom plus jump-sum density")
    if not isinstance(m, (StableDrift, BrownianDrift, SpectrallyNegativeStable, PerturbedCompoundPoisson)):
        raise TypeError(f"unsupported model {type(m).__name__}")

    def g(t):
        t = np.asarray(t, dtype=float)
        return z / t * m.y_density(z, t)

    scale = min(_time_scale(m, z), T / 4)
    res = _require(integrate_finite(g, 0.0, T, spec, vectorized=True,
                                    breaks=_geometric(0.0, T, scale)),
                   "first-passage integral")
    return _estimate(res.value, res.error_estimate + 1e-12, QUADRATURE,
                     f"integral={res.value!r}+-{res.error_estimate:.3g}")


def joint_inf_terminal_density(m: LevyModel, x: float, z, T: float, spec: QuadSpec = FORMULA_SPEC):
    """Density in z of P(inf_{t<=T} Y(t) < -x, Y(T) + x in dz):
    int_0^T z/(T-s) p_Y(z, T-s) p_Y(-x, s) ds. Accepts an array of z."""
    _positive("x", x)
    _positive("T", T)
    if not isinstance(m, (StableDrift, BrownianDrift, SpectrallyNegativeStable, PerturbedCompoundPoisson)):
        raise TypeError(f"joint law needs absolutely continuous marginals, got {type(m).__name__}")
    za = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(za <= 0):
        raise ValueError("z must be positive")
    a = 2.0 if isinstance(m, BrownianDrift) else m.params.alpha
    p = -1.0 / a

    def g(s):
        s = np.asarray(s, dtype=float)
        r = T - s
        first = m.y_density(-x, s)
        second = np.stack([m.y_density(zi, r) for zi in za], axis=1)
        return (za[None, :] / r[:, None]) * second * first[:, None]

    scale = min(_time_scale(m, min(x, float(za.min()))), T / 4)
    res = _integrate_with_exponents(g, 0.0, T, p, p, spec, scale)
    _require(res, "joint density integral")
    out = np.maximum(res.value, 0.0)
    return float(out[0]) if np.ndim(z) == 0 else out


def joint_point(m: LevyModel, x: float, z: float, T: float) -> JointDensityPoint:
    return JointDensityPoint(x, z, T, joint_inf_terminal_density(m, x, z, T))


def spectrally_negative_sup(alpha: float, sigma: float, u: float, T: float) -> ProbabilityEstimate:
    """P(sup_{t<=T} Z(t) > u) = alpha P(Z(T) > u) for driftless beta=-1 stable Z."""
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    _positive("sigma", sigma)
    _positive("T", T)
    if u < 0:
        raise ValueError(f"u must be non-negative, got {u}")
    p = StableParams(alpha, -1.0, sigma * T ** (1.0 / alpha))
    raw = alpha * float(stable_tail(u, p))
    if u == 0:
        return _exact(min(raw, 1.0), "P(Z > 0) = 1/alpha")
    return _estimate(raw, alpha * 1e-12, QUADRATURE, "alpha times the stable tail")


__all__ = [
    "ProbabilityEstimate",
    "JointDensityPoint",
    "NumericalError",
    "FORMULA_SPEC",
    "sup_finite",
    "sup_infinite",
    "sup_infinite_stable_ml",
    "takacs_finite",
    "takacs_infinite",
    "takacs_negative",
    "kendall_first_passage_cdf",
    "joint_inf_terminal_density",
    "joint_point",
    "spectrally_negative_sup",
]
