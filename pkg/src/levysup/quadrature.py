"""Adaptive one-dimensional quadrature.

Globally adaptive Gauss-Kronrod (G7/K15) with batched panel evaluation.
Integrands may be scalar callables or vectorized callables that take an
array of abscissae and return an array whose leading axis matches it
(trailing axes make the integrand vector-valued; every component is
integrated over the same panels).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# Kronrod 15-point nodes on [-1, 1] (positive half incl. centre) with the
# embedded 7-point Gauss weights.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
W_KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
W_GAUSS = np.zeros(15)
# Gauss nodes sit at the odd Kronrod positions.
_g_full = np.concatenate([_WG[:-1], _WG[::-1]])
W_GAUSS[1::2] = _g_full


class IntegrandNaNError(ValueError):
    """The integrand returned NaN."""

    def __init__(self, abscissa: float):
        super().__init__(f"integrand returned NaN at x={abscissa!r}")
        self.abscissa = abscissa


class NonIntegrableError(ValueError):
    pass


@dataclass(frozen=True)
class QuadSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("abs_tol and rel_tol cannot both be zero")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_SPEC = QuadSpec()


@dataclass(frozen=True)
class IntegralResult:
    """Value with error estimate. For vector integrands `value` and
    `error_estimate` are arrays."""

    value: float
    error_estimate: float
    evaluations: int
    converged: bool

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        return IntegralResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
        )

    def scaled(self, factor: float) -> "IntegralResult":
        return IntegralResult(self.value * factor, self.error_estimate * abs(factor),
                              self.evaluations, self.converged)


def _as_vectorized(f: Callable, vectorized: bool) -> Callable:
    if vectorized:
        return f

    def g(xs):
        return np.array([f(float(x)) for x in xs], dtype=float)

    return g


def _eval_panels(f, lefts, rights):
    centre = 0.5 * (lefts + rights)
    half = 0.5 * (rights - lefts)
    xs = centre[:, None] + half[:, None] * NODES[None, :]
    flat = xs.ravel()
    ys = np.asarray(f(flat), dtype=float)
    if ys.shape[0] != flat.shape[0]:
        raise ValueError("vectorized integrand must preserve the leading axis")
    if np.isnan(ys).any():
        bad = np.argwhere(np.isnan(ys.reshape(flat.shape[0], -1)))[0, 0]
        raise IntegrandNaNError(float(flat[bad]))
    ys = ys.reshape((lefts.size, 15) + ys.shape[1:])
    k = np.tensordot(ys, W_KRONROD, axes=([1], [0]))
    g = np.tensordot(ys, W_GAUSS, axes=([1], [0]))
    scale = half.reshape((-1,) + (1,) * (k.ndim - 1))
    return k * scale, np.abs(k - g) * scale


def adaptive_panels(f: Callable, breaks: np.ndarray, spec: QuadSpec) -> IntegralResult:
    """Globally adaptive G7/K15 over the initial panels given by `breaks`.

    `f` must be vectorized. Panels whose error exceeds their share of the
    remaining tolerance are bisected in batches.
    """
    breaks = np.asarray(breaks, dtype=float)
    lefts, rights = breaks[:-1].copy(), breaks[1:].copy()
    vals, errs = _eval_panels(f, lefts, rights)
    evaluations = 15 * lefts.size
    done_val = 0.0
    done_err = 0.0
    while True:
        total = done_val + vals.sum(axis=0)
        total_err = done_err + errs.sum(axis=0)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            return _result(total, total_err, evaluations, True)
        n_live = lefts.size
        # Normalized per-panel error against each component's tolerance.
        perr = errs / tol if errs.ndim == 1 else (errs / tol).max(axis=tuple(range(1, errs.ndim)))
        share = 1.0 / (n_live + 1)
        split = perr > share
        if not split.any():
            split[np.argmax(perr)] = True
        # Panels too narrow to bisect in floating point are frozen.
        width_ok = (rights - lefts) > 4 * np.finfo(float).eps * np.maximum(np.abs(lefts), np.abs(rights))
        frozen = split & ~width_ok
        split &= width_ok
        budget = spec.max_subdivisions - n_live
        if not split.any() or budget <= 0:
            return _result(total, total_err, evaluations, False)
        idx = np.flatnonzero(split)
        if idx.size > budget:
            idx = idx[np.argsort(perr[idx])[::-1][:budget]]
            split = np.zeros_like(split)
            split[idx] = True
        keep = ~split
        if frozen.any():
            # Account frozen panels as final; they can no longer improve.
            keep_mask = keep & ~frozen
            done_val = done_val + vals[frozen].sum(axis=0)
            done_err = done_err + errs[frozen].sum(axis=0)
        else:
            keep_mask = keep
        mids = 0.5 * (lefts[split] + rights[split])
        new_l = np.concatenate([lefts[split], mids])
        new_r = np.concatenate([mids, rights[split]])
        nv, ne = _eval_panels(f, new_l, new_r)
        evaluations += 15 * new_l.size
        lefts = np.concatenate([lefts[keep_mask], new_l])
        rights = np.concatenate([rights[keep_mask], new_r])
        vals = np.concatenate([vals[keep_mask], nv])
        errs = np.concatenate([errs[keep_mask], ne])


def _result(total, err, evaluations, converged) -> IntegralResult:
    if np.ndim(total) == 0:
        return IntegralResult(float(total), float(err), int(evaluations), bool(converged))
    return IntegralResult(np.asarray(total), np.asarray(err), int(evaluations), bool(converged))


def integrate_finite(f: Callable, a: float, b: float, spec: QuadSpec = DEFAULT_SPEC,
                     *, vectorized: bool = False, breaks=None) -> IntegralResult:
    """Integrate `f` over [a, b] without evaluating it at the endpoints.

    `breaks` optionally adds interior points where the integrand changes
    character; they become initial panel boundaries.
    """
    if not a <= b:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    if a == b:
        return IntegralResult(0.0, 0.0, 0, True)
    pts = [a, b]
    if breaks is not None:
        pts.extend(x for x in breaks if a < x < b)
    return adaptive_panels(_as_vectorized(f, vectorized), np.unique(pts), spec)


def integrate_semi_infinite(f: Callable, a: float, spec: QuadSpec = DEFAULT_SPEC, *,
                            vectorized: bool = False,
                            envelope: Optional[Callable[[float], float]] = None,
                            segment: Optional[float] = None,
                            tail_bound: Optional[Callable[[float], float]] = None,
                            max_segments: int = 100_000) -> IntegralResult:
    """Integrate `f` over (a, inf).

    Without `envelope` the half line is mapped onto (0, 1] by
    x = a + t/(1-t). With `envelope` (a decreasing bound |f(x)| <= envelope(x))
    the integrand is treated as oscillatory: fixed-length segments are laid
    out until the envelope drops below abs_tol/10 and the truncated tail,
    `tail_bound(x_end)` or the mapped integral of the envelope, is added to
    the error estimate.
    """
    fv = _as_vectorized(f, vectorized)
    if envelope is None:
        def mapped(t):
            x = a + t / (1.0 - t)
            jac = 1.0 / (1.0 - t) ** 2
            y = np.asarray(fv(x), dtype=float)
            return y * jac.reshape((-1,) + (1,) * (y.ndim - 1))
        return adaptive_panels(mapped, np.array([0.0, 1.0]), spec)

    if segment is None or segment <= 0:
        raise ValueError("oscillatory mode needs a positive segment length")
    cutoff = spec.abs_tol / 10.0
    k = 1
    while envelope(a + k * segment) >= cutoff:
        k += 1
        if k > max_segments:
            return IntegralResult(float("nan"), float("inf"), 0, False)
    x_end = a + k * segment
    res = adaptive_panels(fv, a + segment * np.arange(k + 1), spec)
    if tail_bound is not None:
        tail = float(tail_bound(x_end))
    else:
        tail = integrate_semi_infinite(envelope, x_end, QuadSpec(cutoff, 1e-3, 200)).value
    return IntegralResult(res.value, res.error_estimate + tail, res.evaluations,
                          res.converged and tail <= max(spec.abs_tol, 1e-300))


def integrate_power_endpoint(f_smooth: Callable, a: float, b: float, p_left: float, p_right: float,
                             spec: QuadSpec = DEFAULT_SPEC, *, vectorized: bool = False) -> IntegralResult:
    """Integrate (x-a)^p_left (b-x)^p_right f_smooth(x) over [a, b].

    The interval is split at its midpoint; on the left half the substitution
    x = a + w^(1/(1+p_left)) absorbs the singular factor exactly, mirrored on
    the right half.
    """
    if p_left <= -1 or p_right <= -1:
        raise NonIntegrableError(f"endpoint exponents must exceed -1, got {p_left}, {p_right}")
    if not a <= b:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    if a == b:
        return IntegralResult(0.0, 0.0, 0, True)
    fv = _as_vectorized(f_smooth, vectorized)
    m = 0.5 * (a + b)
    ql, qr = 1.0 / (1.0 + p_left), 1.0 / (1.0 + p_right)

    def left(w):
        x = a + w ** ql
        y = np.asarray(fv(x), dtype=float)
        fac = ql * (b - x) ** p_right
        return y * fac.reshape((-1,) + (1,) * (y.ndim - 1))

    def right(w):
        x = b - w ** qr
        y = np.asarray(fv(x), dtype=float)
        fac = qr * (x - a) ** p_left
        return y * fac.reshape((-1,) + (1,) * (y.ndim - 1))

    half_spec = QuadSpec(spec.abs_tol / 2, spec.rel_tol, spec.max_subdivisions)
    r1 = adaptive_panels(left, np.array([0.0, (m - a) ** (1.0 + p_left)]), half_spec)
    r2 = adaptive_panels(right, np.array([0.0, (b - m) ** (1.0 + p_right)]), half_spec)
    return r1 + r2


__all__ = [
    "QuadSpec",
    "IntegralResult",
    "IntegrandNaNError",
    "NonIntegrableError",
    "DEFAULT_SPEC",
    "adaptive_panels",
    "integrate_finite",
    "integrate_semi_infinite",
    "integrate_power_endpoint",
]
