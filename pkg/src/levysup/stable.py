"""Spectrally one-sided stable laws and the Mittag-Leffler function.

All stable quantities use the S_alpha(sigma, beta, mu) parametrization
with characteristic function

    E exp(i th Z) = exp(-sigma^alpha |th|^alpha (1 - i beta sign(th) tan(pi alpha/2)) + i mu th)

for 1 < alpha < 2, and N(mu, 2 sigma^2) at alpha = 2.

Standardized (sigma=1, mu=0, beta=+1) evaluations are done in three
regimes: the oscillatory Fourier integral on |x| <= TAIL_SWITCH, the
heavy-tail asymptotic series for x > TAIL_SWITCH and zero on the light
side below -TAIL_SWITCH. Everything for beta=-1 is obtained by reflection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from .quadrature import QuadSpec, integrate_power_endpoint, integrate_semi_infinite, adaptive_panels

TAIL_SWITCH = 50.0
# Inner (Fourier) integrals are run much tighter than any caller needs.
FOURIER_SPEC = QuadSpec(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=20000)
ML_MAX_TERMS = 100_000


class StableEvaluationError(ArithmeticError):
    """A stable-law integral failed to converge."""


class MittagLefflerDomainError(ValueError):
    pass


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float = 1.0
    sigma: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.alpha < 2.0:
            if self.beta not in (-1.0, 1.0):
                raise ValueError(f"beta must be -1 or +1 for alpha < 2, got {self.beta}")
        elif not -1.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")

    @property
    def gaussian(self) -> bool:
        return self.alpha == 2.0

    def scaled(self, t: float) -> "StableParams":
        """Law of Z(t) for the Levy process with Z(1) ~ self and no shift."""
        return StableParams(self.alpha, self.beta, self.sigma * t ** (1.0 / self.alpha), self.mu * t)


# ---------------------------------------------------------------------------
# standardized beta=+1 building blocks

def _tau(alpha: float) -> float:
    return math.tan(math.pi * alpha / 2.0)


def _cutoff(alpha: float, tol: float) -> float:
    """Point beyond which exp(-t^alpha) < tol."""
    return (-math.log(tol)) ** (1.0 / alpha)


def _exp_tail(alpha: float):
    # int_L^inf exp(-t^a) dt <= exp(-L^a) / (a L^(a-1)) by convexity of t^a.
    return lambda L: math.exp(-L ** alpha) / (alpha * L ** (alpha - 1.0))


def _segment(alpha: float, xmax: float, tol: float) -> float:
    L = _cutoff(alpha, tol / 10.0)
    omega = xmax + alpha * abs(_tau(alpha)) * L ** (alpha - 1.0)
    return min(1.0, math.pi / max(omega, 1e-12))


def _heavy_coeffs(alpha: float, kmax: int = 40):
    """Coefficients a_k with f(x) ~ sum_k a_k x^(-alpha k - 1) as x -> +inf."""
    cos_h = math.cos(math.pi * alpha / 2.0)
    k = np.arange(1, kmax + 1)
    sin_k = np.sin(math.pi * alpha * k)
    sin_k[np.abs(sin_k) < 1e-12] = 0.0
    with np.errstate(divide="ignore"):
        logmag = (special.gammaln(alpha * k + 1.0) - special.gammaln(k + 1.0)
                  - k * math.log(abs(cos_h)) + np.log(np.abs(sin_k)))
    sign = (-1.0) ** (k + 1) * np.sign(sin_k) * np.sign(cos_h) ** k
    return k, sign, logmag


def _asymptotic_sum(x, alpha: float, power_shift: float, extra_log=None):
    """Sum sign_k exp(logmag_k + extra_k) x^(-alpha k + power_shift) with
    optimal truncation (stop once terms stop shrinking)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k, sign, logmag = _heavy_coeffs(alpha)
    if extra_log is not None:
        logmag = logmag + extra_log(k)
    out = np.zeros_like(x)
    lx = np.log(x)
    live = sign != 0
    k, sign, logmag = k[live], sign[live], logmag[live]
    for i, (xi, lxi) in enumerate(zip(x, lx)):
        terms = sign * np.exp(logmag - alpha * k * lxi) / math.pi
        mags = np.abs(terms)
        stop = len(terms)
        for j in range(1, len(terms)):
            if mags[j] > mags[j - 1] or mags[j] < 1e-18 * mags[0]:
                stop = j
                break
        out[i] = math.fsum(terms[:stop]) * xi ** power_shift
    return out


def _pdf_heavy(x, alpha):
    return _asymptotic_sum(x, alpha, -1.0)


def _tail_heavy(x, alpha):
    # P(Z > x) ~ sum a_k x^(-alpha k) / (alpha k)
    return _asymptotic_sum(x, alpha, 0.0, extra_log=lambda k: -np.log(alpha * k))


def _upper_partial_heavy(y, alpha):
    # E(Z - y)^+ = int_y^inf P(Z > x) dx ~ sum a_k y^(1 - alpha k) / (alpha k (alpha k - 1))
    return _asymptotic_sum(y, alpha, 1.0,
                           extra_log=lambda k: -np.log(alpha * k) - np.log(alpha * k - 1.0))


def _fourier_pdf(x: np.ndarray, alpha: float):
    """(1/pi) int_0^inf exp(-t^a) cos(t x - t^a tan(pi a/2)) dt for each x."""
    tau = _tau(alpha)
    xmax = float(np.max(np.abs(x)))
    spec = FOURIER_SPEC

    def integrand(t):
        ta = t ** alpha
        return np.exp(-ta)[:, None] * np.cos(np.outer(t, x) - (ta * tau)[:, None])

    res = integrate_semi_infinite(
        integrand, 0.0, spec, vectorized=True,
        envelope=lambda t: math.exp(-t ** alpha),
        segment=_segment(alpha, xmax, spec.abs_tol),
        tail_bound=_exp_tail(alpha),
    )
    return res.value / math.pi, res.error_estimate / math.pi, res.converged


def _fourier_tail(z: np.ndarray, alpha: float, beta: float):
    """Gil-Pelaez: P(Z > z) = 1/2 + (1/pi) int_0^inf exp(-t^a) sin(beta tau t^a - t z)/t dt."""
    tau = beta * _tau(alpha)
    zmax = float(np.max(np.abs(z)))
    spec = FOURIER_SPEC

    def integrand(t):
        ta = t ** alpha
        return (np.exp(-ta) / t)[:, None] * np.sin((ta * tau)[:, None] - np.outer(t, z))

    seg = _segment(alpha, zmax, spec.abs_tol)
    res = integrate_semi_infinite(
        integrand, 0.0, spec, vectorized=True,
        envelope=lambda t: math.exp(-t ** alpha) * min(1.0 / t, abs(tau) * t ** (alpha - 1.0) + zmax),
        segment=seg,
        tail_bound=lambda L: _exp_tail(alpha)(L) / L,
    )
    return 0.5 + res.value / math.pi, res.error_estimate / math.pi, res.converged


def _fourier_neg_part(y: np.ndarray, alpha: float):
    """E(y - Z)^+ = (E|Z - y| + y) / 2 with
    E|Z - y| = (2/pi) int_0^inf (1 - exp(-t^a) cos(t y - tau t^a)) / t^2 dt."""
    tau = _tau(alpha)
    ymax = float(np.max(np.abs(y)))
    spec = FOURIER_SPEC
    L = _cutoff(alpha, spec.abs_tol / 10.0)

    def numer(t):
        ta = t ** alpha
        theta = np.outer(t, y) - (ta * tau)[:, None]
        return 2.0 * np.sin(0.5 * theta) ** 2 - np.cos(theta) * np.expm1(-ta)[:, None]

    t0 = min(1.0, math.pi / (ymax + 1.0), L)
    # near zero the integrand behaves like t^(alpha-2); pull that factor out
    head = integrate_power_endpoint(lambda t: numer(t) / (t ** alpha)[:, None], 0.0, t0,
                                    alpha - 2.0, 0.0, spec, vectorized=True)
    seg = _segment(alpha, ymax, spec.abs_tol)
    n = max(1, int(math.ceil((L - t0) / seg)))
    body = adaptive_panels(lambda t: numer(t) / (t * t)[:, None], np.linspace(t0, L, n + 1), spec)
    # int_L^inf (1 - e^{-t^a} cos)/t^2 = 1/L - int_L^inf e^{-t^a} cos / t^2
    tail_err = math.exp(-L ** alpha) / L ** 2
    abs_mean = (2.0 / math.pi) * (head.value + body.value + 1.0 / L)
    err = (2.0 / math.pi) * (head.error_estimate + body.error_estimate + tail_err)
    return 0.5 * (abs_mean + y), 0.5 * err, head.converged and body.converged


def _check(converged: bool, what: str, alpha: float):
    if not converged:
        raise StableEvaluationError(f"{what} did not converge (alpha={alpha})")


def _pdf_std(x, alpha: float):
    """Density of S_alpha(1, +1, 0) at x (array)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mid = np.abs(x) <= TAIL_SWITCH
    heavy = x > TAIL_SWITCH
    if mid.any():
        val, _, ok = _fourier_pdf(x[mid], alpha)
        _check(ok, "stable density integral", alpha)
        out[mid] = np.maximum(val, 0.0)
    if heavy.any():
        out[heavy] = _pdf_heavy(x[heavy], alpha)
    return out


def _tail_std(z, alpha: float, beta: float):
    """P(Z > z) for Z ~ S_alpha(1, beta, 0), beta = +-1."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    heavy_side = beta * z > TAIL_SWITCH       # z deep into the heavy tail
    light_side = beta * z < -TAIL_SWITCH
    at_zero = z == 0.0
    mid = ~(heavy_side | light_side | at_zero)
    if beta > 0:
        out[heavy_side] = _tail_heavy(z[heavy_side], alpha) if heavy_side.any() else 0.0
        out[light_side] = 1.0
    else:
        out[heavy_side] = 1.0 - _tail_heavy(-z[heavy_side], alpha) if heavy_side.any() else 0.0
        out[light_side] = 0.0
    out[at_zero] = 0.5 + math.atan(beta * _tau(alpha)) / (math.pi * alpha)
    if mid.any():
        val, _, ok = _fourier_tail(z[mid], alpha, beta)
        _check(ok, "stable tail integral", alpha)
        out[mid] = np.clip(val, 0.0, 1.0)
    return out


def _neg_part_std(y, alpha: float):
    """E(y - Z)^+ for Z ~ S_alpha(1, +1, 0)."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    mid = np.abs(y) <= TAIL_SWITCH
    heavy = y > TAIL_SWITCH
    if mid.any():
        val, _, ok = _fourier_neg_part(y[mid], alpha)
        _check(ok, "negative-part integral", alpha)
        out[mid] = np.maximum(val, 0.0)
    if heavy.any():
        yh = y[heavy]
        out[heavy] = yh + _upper_partial_heavy(yh, alpha)
    return out


# ---------------------------------------------------------------------------
# public operations

def _scalar_or_array(x, out):
    return float(out[0]) if np.ndim(x) == 0 else out


def stable_pdf(x, p: StableParams):
    """Density of S_alpha(sigma, beta, mu) at x (scalar or array)."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    z = (xa - p.mu) / p.sigma
    if p.gaussian:
        out = np.exp(-0.25 * z * z) / (2.0 * math.sqrt(math.pi))
    elif p.beta > 0:
        out = _pdf_std(z, p.alpha)
    else:
        out = _pdf_std(-z, p.alpha)
    return _scalar_or_array(x, out / p.sigma)


def stable_tail(u, p: StableParams):
    """P(Z > u) for Z ~ S_alpha(sigma, beta, mu)."""
    ua = np.atleast_1d(np.asarray(u, dtype=float))
    z = (ua - p.mu) / p.sigma
    if p.gaussian:
        out = 0.5 * special.erfc(z / 2.0)
    else:
        out = _tail_std(z, p.alpha, p.beta)
    return _scalar_or_array(u, out)


def neg_part_mean_unit(p: StableParams, c):
    """E max(c - Z, 0) for spectrally positive Z ~ S_alpha(sigma, +1, 0)."""
    if p.mu != 0.0 or (not p.gaussian and p.beta != 1.0):
        raise ValueError("neg_part_mean_unit needs beta=+1 and mu=0")
    ca = np.atleast_1d(np.asarray(c, dtype=float))
    y = ca / p.sigma
    if p.gaussian:
        s = math.sqrt(2.0)
        out = y * special.ndtr(y / s) + s * np.exp(-0.25 * y * y) / math.sqrt(2.0 * math.pi)
    else:
        out = _neg_part_std(y, p.alpha)
    return _scalar_or_array(c, p.sigma * out)


def cms_constants(alpha: float, beta: float):
    """(B, S) of the Chambers-Mallows-Stuck construction in ST form:
    B = arctan(beta tan(pi a/2))/a, S = (1 + beta^2 tan^2(pi a/2))^(1/(2a))."""
    tau = beta * _tau(alpha)
    return math.atan(tau) / alpha, (1.0 + tau * tau) ** (1.0 / (2.0 * alpha))


def cms_transform(v, w, alpha: float, beta: float):
    """Map V ~ U(-pi/2, pi/2), W ~ Exp(1) to a standard S_alpha(1, beta, 0) draw."""
    b, s = cms_constants(alpha, beta)
    ab = alpha * (v + b)
    return (s * np.sin(ab) / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - ab) / w) ** ((1.0 - alpha) / alpha))


def stable_sample(p: StableParams, rng: np.random.Generator, size=None):
    """Exact draw(s) from S_alpha(sigma, beta, mu)."""
    if p.gaussian:
        z = math.sqrt(2.0) * rng.standard_normal(size)
    else:
        v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
        w = rng.standard_exponential(size)
        z = cms_transform(v, w, p.alpha, p.beta)
    return p.sigma * z + p.mu


# ---------------------------------------------------------------------------
# Mittag-Leffler

def mittag_leffler(rho: float, x: float, max_terms: int = ML_MAX_TERMS) -> float:
    """E_rho(x) = sum_n x^n / Gamma(1 + rho n).

    Terms are summed with exact (fsum) accumulation while the largest term
    stays below 1e3. Beyond that, negative arguments with rho < 1 use the
    integral representation and the rest is summed in mpmath with enough
    extra digits.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if x == 0.0:
        return 1.0
    if rho == 1.0:
        return math.exp(x)
    lx = math.log(abs(x))
    sgn = -1.0 if x < 0 else 1.0
    # locate the largest term and the number of terms needed
    peak = 0.0
    n_stop = None
    prev = 0.0
    for n in range(1, max_terms + 1):
        lt = n * lx - math.lgamma(1.0 + rho * n)
        peak = max(peak, lt)
        if lt < prev and lt < math.log(1e-18):
            n_stop = n
            break
        prev = lt
    if n_stop is None:
        raise MittagLefflerDomainError(
            f"series for E_{rho}({x}) does not settle within {max_terms} terms; "
            f"argument outside the supported domain")
    if peak < math.log(1e3):
        terms = [1.0]
        for n in range(1, n_stop + 1):
            terms.append(sgn ** n * math.exp(n * lx - math.lgamma(1.0 + rho * n)))
        return math.fsum(terms)
    if x < 0 and rho < 1:
        return _mittag_leffler_negative(rho, -x)
    digits = int(peak / math.log(10.0)) + 25
    with mpmath.workdps(digits):
        xm = mpmath.mpf(x)
        rm = mpmath.mpf(rho)
        total = mpmath.fsum(xm ** n / mpmath.gamma(1 + rm * n) for n in range(n_stop + 1))
        return float(total)


def _mittag_leffler_negative(rho: float, t: float) -> float:
    """E_rho(-t) for 0 < rho < 1, t > 0, as a completely monotone integral.

    E_rho(-t) = sin(pi rho)/(pi rho) int_0^inf exp(-(t v)^(1/rho)) / (v^2 + 2 v cos(pi rho) + 1) dv
    """
    cos_pr = math.cos(math.pi * rho)

    def f(v):
        return np.exp(-np.power(t * v, 1.0 / rho)) / (v * v + 2.0 * v * cos_pr + 1.0)

    res = integrate_semi_infinite(f, 0.0, FOURIER_SPEC, vectorized=True)
    if not res.converged:
        raise StableEvaluationError(f"Mittag-Leffler integral for E_{rho}({-t}) did not converge")
    return math.sin(math.pi * rho) / (math.pi * rho) * res.value
