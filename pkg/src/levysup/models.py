"""Parametric spectrally one-sided Levy families.

Each family describes a process X(t). The spectrally negative companion
used by first-passage and joint-law formulas is Y = -X for the spectrally
positive families and Y = X for SpectrallyNegativeStable; `y_density`
returns the marginal density of that Y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special

from .quadrature import QuadSpec, integrate_finite
from .stable import StableParams, neg_part_mean_unit, stable_pdf, stable_sample, stable_tail

MIXTURE_SPEC = QuadSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=4000)


class AtomicLawError(ValueError):
    """The marginal law has an atom, so it has no density."""


def _poisson_cutoff(mean: float) -> int:
    # Poisson tail mass beyond this is far below 1e-12.
    return int(math.ceil(mean + 40.0 * math.sqrt(mean) + 40.0))


def _as_array(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


def _ret(x, out):
    return float(out[0]) if np.ndim(x) == 0 else out


def _ive1(z):
    """Exponentially scaled I_1. scipy returns NaN for arguments near 1e9;
    there the Hankel expansion is exact to double precision."""
    out = special.ive(1, z)
    bad = np.isnan(out) & (z > 1e6)
    if bad.any():
        zb = z[bad]
        r = 1.0 / (8.0 * zb)
        out[bad] = (1.0 - 3.0 * r - 15.0 / 2.0 * r ** 2 - 315.0 / 6.0 * r ** 3) / np.sqrt(2.0 * math.pi * zb)
    return out


def jumpsum_density(y, t: float, lam: float, mu_rate: float):
    """Absolutely continuous part of the law of J(t), the compound Poisson
    sum with Exp(mu_rate) jumps at rate lam, at y > 0.

    Sums sum_{n>=1} e^{-lam t}(lam t)^n/n! Gamma(n, mu_rate) density in closed
    form: e^{-lam t - mu y} sqrt(lam t mu / y) I_1(2 sqrt(lam t mu y)).
    """
    ya = _as_array(y)
    out = np.zeros_like(ya)
    pos = ya > 0
    yp = ya[pos]
    lt = lam * t
    z = 2.0 * np.sqrt(lt * mu_rate * yp)
    out[pos] = np.exp(-lt - mu_rate * yp + z) * np.sqrt(lt * mu_rate / yp) * _ive1(z)
    return _ret(y, out)


def jumpsum_density_series(y, t: float, lam: float, mu_rate: float):
    """Same quantity as `jumpsum_density`, as the truncated Poisson-Gamma
    mixture (n up to lam t + 40 sqrt(lam t) + 40)."""
    ya = _as_array(y)
    out = np.zeros_like(ya)
    pos = ya > 0
    yp = ya[pos]
    lt = lam * t
    total = np.zeros_like(yp)
    for n in range(1, _poisson_cutoff(lt) + 1):
        logw = -lt + n * math.log(lt) - math.lgamma(n + 1)
        logg = n * math.log(mu_rate) + (n - 1) * np.log(yp) - mu_rate * yp - math.lgamma(n)
        total += np.exp(logw + logg)
    out[pos] = total
    return _ret(y, out)


def jumpsum_cdf_complement(y, t: float, lam: float, mu_rate: float):
    """P(J(t) > y) for y >= 0."""
    ya = _as_array(y)
    lt = lam * t
    total = np.zeros_like(ya)
    for n in range(1, _poisson_cutoff(lt) + 1):
        w = math.exp(-lt + n * math.log(lt) - math.lgamma(n + 1)) if lt > 0 else 0.0
        total += w * special.gammaincc(n, mu_rate * np.maximum(ya, 0.0))
    return _ret(y, total)


def drift_minus_jumps_positive_part(a, t, lam: float, mu_rate: float):
    """E(a - J(t))^+ for a >= 0, via E(a - G_n)^+ = a P(G_n <= a) - (n/mu) P(G_{n+1} <= a).

    `a` and `t` broadcast against each other.
    """
    aa, ta = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(t, dtype=float))
    lt = lam * ta
    x = mu_rate * aa
    total = np.exp(-lt) * aa
    log_lt = np.log(lt)
    for n in range(1, _poisson_cutoff(float(np.max(lt))) + 1):
        w = np.exp(-lt + n * log_lt - math.lgamma(n + 1))
        total = total + w * (aa * special.gammainc(n, x) - (n / mu_rate) * special.gammainc(n + 1, x))
    out = np.maximum(total, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StableDrift:
    """X(t) = Z(t) - c t with Z spectrally positive stable (beta=+1, mu=0)."""

    params: StableParams
    c: float = 0.0
    kind: str = field(default="stable_drift", init=False, repr=False)

    def __post_init__(self):
        if self.params.mu != 0.0 or (not self.params.gaussian and self.params.beta != 1.0):
            raise ValueError("StableDrift needs beta=+1 and mu=0")

    has_infinite_variation = True
    y_sign = -1

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def mean_rate(self) -> float:
        return -self.c

    def kernel_exponents(self):
        a = self.params.alpha
        return -1.0 / a, 1.0 / a - 1.0

    def density(self, v, t):
        """s^(-1/a) f(s^(-1/a)(v + c s)), f the density of Z(1)."""
        _check_time(t)
        a = self.params.alpha
        scale = np.power(t, -1.0 / a)
        return scale * stable_pdf(scale * (v + self.c * t), self.params)

    def y_density(self, z, t):
        return self.density(-np.asarray(z, dtype=float) if np.ndim(z) else -z, t)

    def tail(self, u, t):
        """P(X(t) > u)."""
        _check_time(t)
        scale = np.power(t, -1.0 / self.params.alpha)
        return stable_tail(scale * (u + self.c * t), self.params)

    def neg_part_mean_ratio(self, t):
        """E(X(t))^-/t = E(c - t^(1/a - 1) Z(1))^+."""
        _check_time(t)
        a = self.params.alpha
        sig = self.params.sigma * np.power(t, 1.0 / a - 1.0)
        unit = StableParams(a, 1.0, 1.0)
        return sig * neg_part_mean_unit(unit, self.c / sig)

    def sample_increment(self, dt: float, rng: np.random.Generator, size=None):
        return stable_sample(self.params.scaled(dt), rng, size) - self.c * dt

    def to_spec(self) -> dict:
        return {"model": self.kind, "alpha": self.params.alpha, "sigma": self.params.sigma, "c": self.c}


@dataclass(frozen=True)
class SpectrallyNegativeStable:
    """X(t) = Z(t), Z stable with beta=-1, mu=0 (no drift)."""

    params: StableParams
    kind: str = field(default="stable_negative", init=False, repr=False)

    def __post_init__(self):
        if self.params.mu != 0.0 or (not self.params.gaussian and self.params.beta != -1.0):
            raise ValueError("SpectrallyNegativeStable needs beta=-1 and mu=0")

    has_infinite_variation = True
    y_sign = 1
    c = 0.0

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def mean_rate(self) -> float:
        return 0.0

    def kernel_exponents(self):
        a = self.params.alpha
        return -1.0 / a, 1.0 / a - 1.0

    def density(self, v, t):
        _check_time(t)
        scale = np.power(t, -1.0 / self.params.alpha)
        return scale * stable_pdf(scale * np.asarray(v, dtype=float), self.params)

    def y_density(self, z, t):
        return self.density(z, t)

    def tail(self, u, t):
        _check_time(t)
        scale = np.power(t, -1.0 / self.params.alpha)
        return stable_tail(scale * np.asarray(u, dtype=float), self.params)

    def neg_part_mean_ratio(self, t):
        # -Z(1) = W is spectrally positive with zero mean, so E(Z)^- = E(W)^+ = E(0 - W)^+.
        _check_time(t)
        a = self.params.alpha
        unit = StableParams(a, 1.0, 1.0)
        return self.params.sigma * np.power(t, 1.0 / a - 1.0) * neg_part_mean_unit(unit, 0.0)

    def sample_increment(self, dt: float, rng: np.random.Generator, size=None):
        return stable_sample(self.params.scaled(dt), rng, size)

    def to_spec(self) -> dict:
        return {"model": self.kind, "alpha": self.params.alpha, "sigma": self.params.sigma}


@dataclass(frozen=True)
class BrownianDrift:
    """X(t) = vol W(t) - c t."""

    vol: float = 1.0
    c: float = 0.0
    kind: str = field(default="brownian", init=False, repr=False)

    def __post_init__(self):
        if self.vol <= 0:
            raise ValueError(f"vol must be positive, got {self.vol}")

    has_infinite_variation = True
    y_sign = -1
    alpha = 2.0

    @property
    def mean_rate(self) -> float:
        return -self.c

    def kernel_exponents(self):
        return -0.5, -0.5

    def density(self, v, t):
        _check_time(t)
        sd = self.vol * np.sqrt(t)
        z = (np.asarray(v, dtype=float) + self.c * np.asarray(t, dtype=float)) / sd
        out = np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))
        return float(out) if np.ndim(out) == 0 else out

    def y_density(self, z, t):
        return self.density(-np.asarray(z, dtype=float), t)

    def tail(self, u, t):
        _check_time(t)
        out = special.ndtr(-(np.asarray(u, dtype=float) + self.c * np.asarray(t, dtype=float))
                           / (self.vol * np.sqrt(t)))
        return float(out) if np.ndim(out) == 0 else out

    def neg_part_mean_ratio(self, t):
        """E(a N - c)^- = c Phi(c/a) + a phi(c/a) with a = vol / sqrt(t)."""
        _check_time(t)
        a = self.vol / np.sqrt(t)
        r = self.c / a
        out = self.c * special.ndtr(r) + a * np.exp(-0.5 * r * r) / math.sqrt(2.0 * math.pi)
        return float(out) if np.ndim(out) == 0 else out

    def sample_increment(self, dt: float, rng: np.random.Generator, size=None):
        return self.vol * math.sqrt(dt) * rng.standard_normal(size) - self.c * dt

    def to_spec(self) -> dict:
        return {"model": self.kind, "vol": self.vol, "c": self.c}


@dataclass(frozen=True)
class CompoundPoissonDrift:
    """X(t) = J(t) - c t, J compound Poisson with rate lam and Exp(mu_rate) jumps."""

    lam: float
    mu_rate: float
    c: float
    kind: str = field(default="cpoisson", init=False, repr=False)

    def __post_init__(self):
        if self.lam <= 0 or self.mu_rate <= 0:
            raise ValueError("lam and mu_rate must be positive")
        if self.c <= 0:
            raise ValueError(f"drift c must be positive, got {self.c}")

    has_infinite_variation = False
    y_sign = -1

    @property
    def mean_rate(self) -> float:
        return self.lam / self.mu_rate - self.c

    def density(self, v, t):
        raise AtomicLawError(
            "compound Poisson marginals have an atom at -c t; use cp_jumpsum_density "
            "for the absolutely continuous part")

    def jumpsum_density(self, x, t):
        """Density of X(t) = J(t) - c t at x, atom at -c t excluded."""
        _check_time(t)
        return jumpsum_density(np.asarray(x, dtype=float) + self.c * t, t, self.lam, self.mu_rate)

    def y_density(self, z, t):
        """Absolutely continuous part of the density of Y(t) = c t - J(t) at z."""
        return self.jumpsum_density(-np.asarray(z, dtype=float), t)

    def atom_mass(self, t: float) -> float:
        return math.exp(-self.lam * t)

    def tail(self, u: float, t: float) -> float:
        """P(X(t) > u)."""
        y = u + self.c * t
        if y < 0:
            return 1.0
        return jumpsum_cdf_complement(y, t, self.lam, self.mu_rate)

    def neg_part_mean_ratio(self, t):
        """E(X(t))^-/t = E(c t - J(t))^+ / t."""
        _check_time(t)
        t = np.asarray(t, dtype=float)
        out = drift_minus_jumps_positive_part(self.c * t, t, self.lam, self.mu_rate) / t
        return float(out) if np.ndim(out) == 0 else out

    def sample_increment(self, dt: float, rng: np.random.Generator, size=None):
        n = rng.poisson(self.lam * dt, size)
        return rng.gamma(n, 1.0 / self.mu_rate) * (n > 0) - self.c * dt

    def to_spec(self) -> dict:
        return {"model": self.kind, "lam": self.lam, "mu_rate": self.mu_rate, "c": self.c}


@dataclass(frozen=True)
class PerturbedCompoundPoisson:
    """X(t) = J(t) - c t + Z(t): compound Poisson with drift plus a
    spectrally positive stable perturbation."""

    lam: float
    mu_rate: float
    c: float
    params: StableParams
    kind: str = field(default="perturbed", init=False, repr=False)

    def __post_init__(self):
        if self.lam <= 0 or self.mu_rate <= 0:
            raise ValueError("lam and mu_rate must be positive")
        if self.params.mu != 0.0 or (not self.params.gaussian and self.params.beta != 1.0):
            raise ValueError("perturbation must be spectrally positive with mu=0")

    has_infinite_variation = True
    y_sign = -1

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def mean_rate(self) -> float:
        return self.lam / self.mu_rate - self.c

    def kernel_exponents(self):
        a = self.params.alpha
        return -1.0 / a, 1.0 / a - 1.0

    def _window(self, t):
        return 50.0 * self.params.sigma * t ** (1.0 / self.params.alpha)

    def _jump_breaks(self, t):
        # Where the jump-sum density carries its mass; without these the
        # adaptive rule can miss it on a long integration range.
        centre = self.lam * t / self.mu_rate
        spread = math.sqrt(2.0 * self.lam * t) / self.mu_rate
        return [centre - 5 * spread, centre, centre + 5 * spread, centre + 20 * spread]

    def _density_one(self, v: float, t: float) -> float:
        st = self.params.scaled(t)
        shift = v + self.c * t
        atom = math.exp(-self.lam * t) * stable_pdf(shift, st)
        w = self._window(t)
        upper = shift + w
        if upper <= 0:
            return atom
        breaks = [shift - w / 10, shift, shift + w / 10, *self._jump_breaks(t)]

        def integrand(y):
            return jumpsum_density(y, t, self.lam, self.mu_rate) * stable_pdf(shift - y, st)

        res = integrate_finite(integrand, 0.0, upper, MIXTURE_SPEC, vectorized=True, breaks=breaks)
        if not res.converged:
            raise ArithmeticError(f"mixture density integral failed at v={v}, t={t}")
        return atom + res.value

    def density(self, v, t):
        """Poisson mixture of jump sums convolved with the stable density at time t."""
        _check_time(t)
        vb, tb = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(t, dtype=float))
        out = np.array([self._density_one(vi, ti) for vi, ti in zip(vb.ravel(), tb.ravel())])
        out = out.reshape(vb.shape)
        return float(out) if out.ndim == 0 else out

    def y_density(self, z, t):
        return self.density(-np.asarray(z, dtype=float), t)

    def tail(self, u: float, t: float) -> float:
        """P(X(t) > u): condition on the jump sum J(t) = y."""
        _check_time(t)
        st = self.params.scaled(t)
        shift = u + self.c * t
        first = math.exp(-self.lam * t) * stable_tail(shift, st)
        # Beyond `upper` the stable factor is exactly 1 (light side cut-off).
        upper = max(shift + self._window(t), 0.0)
        rest = jumpsum_cdf_complement(upper, t, self.lam, self.mu_rate)
        if upper == 0.0:
            return first + rest

        def integrand(y):
            return jumpsum_density(y, t, self.lam, self.mu_rate) * stable_tail(shift - y, st)

        res = integrate_finite(integrand, 0.0, upper, MIXTURE_SPEC, vectorized=True,
                               breaks=[shift - self._window(t) / 10, shift, *self._jump_breaks(t)])
        if not res.converged:
            raise ArithmeticError(f"mixture tail integral failed at u={u}, t={t}")
        return first + res.value + rest

    def _neg_part_one(self, t: float) -> float:
        st = self.params.scaled(t)
        a = self.c * t
        unit = StableParams(self.params.alpha, 1.0, 1.0)
        sig = st.sigma
        first = math.exp(-self.lam * t) * sig * neg_part_mean_unit(unit, a / sig)
        upper = a + 50.0 * sig
        if upper <= 0:
            return first / t

        def integrand(y):
            return jumpsum_density(y, t, self.lam, self.mu_rate) * sig * neg_part_mean_unit(unit, (a - y) / sig)

        res = integrate_finite(integrand, 0.0, upper, MIXTURE_SPEC, vectorized=True,
                               breaks=[a, *self._jump_breaks(t)])
        if not res.converged:
            raise ArithmeticError(f"mixture negative-part integral failed at t={t}")
        return (first + res.value) / t

    def neg_part_mean_ratio(self, t):
        """E(X(t))^-/t, conditioning on the jump sum:
        E(Z(t) - (c t - J))^- = sigma_t g((c t - J)/sigma_t), g(y) = E(y - Z(1))^+."""
        _check_time(t)
        ta = _as_array(t)
        return _ret(t, np.array([self._neg_part_one(float(ti)) for ti in ta]))

    def sample_increment(self, dt: float, rng: np.random.Generator, size=None):
        n = rng.poisson(self.lam * dt, size)
        jumps = rng.gamma(n, 1.0 / self.mu_rate) * (n > 0)
        return jumps + stable_sample(self.params.scaled(dt), rng, size) - self.c * dt

    def to_spec(self) -> dict:
        return {"model": self.kind, "lam": self.lam, "mu_rate": self.mu_rate, "c": self.c,
                "alpha": self.params.alpha, "sigma": self.params.sigma}


LevyModel = Union[StableDrift, SpectrallyNegativeStable, BrownianDrift,
                  CompoundPoissonDrift, PerturbedCompoundPoisson]


def _check_time(t):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("time must be positive")


def cp_jumpsum_density(m: CompoundPoissonDrift, x, t):
    return m.jumpsum_density(x, t)


MODEL_KEYS = {
    "stable_drift": ("alpha", "sigma", "c"),
    "stable_negative": ("alpha", "sigma"),
    "brownian": ("vol", "c"),
    "cpoisson": ("lam", "mu_rate", "c"),
    "perturbed": ("lam", "mu_rate", "c", "alpha", "sigma"),
}
DEFAULTS = {"sigma": 1.0, "c": 0.0, "vol": 1.0}


def model_from_spec(spec: dict) -> LevyModel:
    """Build a model from a flat key-value description such as
    {"model": "stable_drift", "alpha": 1.5, "sigma": 1, "c": 1}."""
    spec = dict(spec)
    kind = spec.pop("model", None)
    if kind not in MODEL_KEYS:
        raise ValueError(f"unknown model {kind!r}; choose from {sorted(MODEL_KEYS)}")
    allowed = MODEL_KEYS[kind]
    unknown = set(spec) - set(allowed)
    if unknown:
        raise ValueError(f"model {kind} does not take {sorted(unknown)}")
    vals = {}
    for key in allowed:
        if key in spec:
            vals[key] = float(spec[key])
        elif key in DEFAULTS:
            vals[key] = DEFAULTS[key]
        else:
            raise ValueError(f"model {kind} needs {key}")
    if kind == "stable_drift":
        return StableDrift(StableParams(vals["alpha"], 1.0, vals["sigma"]), vals["c"])
    if kind == "stable_negative":
        return SpectrallyNegativeStable(StableParams(vals["alpha"], -1.0, vals["sigma"]))
    if kind == "brownian":
        return BrownianDrift(vals["vol"], vals["c"])
    if kind == "cpoisson":
        return CompoundPoissonDrift(vals["lam"], vals["mu_rate"], vals["c"])
    return PerturbedCompoundPoisson(vals["lam"], vals["mu_rate"], vals["c"],
                                    StableParams(vals["alpha"], 1.0, vals["sigma"]))


def parse_model_string(text: str) -> LevyModel:
    """Parse `model=stable_drift alpha=1.5 sigma=1 c=1`."""
    pairs = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {token!r}")
        pairs[key] = value
    return model_from_spec(pairs)
