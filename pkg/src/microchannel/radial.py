"""Radial probability density of a molecule released on a ring of radius d0.

The density per unit cross-section area is the Neumann eigen-expansion

    P(r, t) = sum_n C_n J0(beta_n r / d) exp(-beta_n^2 D t / d^2)

with beta_0 = 0, beta_n the positive zeros of J1 and
C_n = J0(beta_n d0 / d) / (pi d^2 J0(beta_n)^2). Terms decay like a Gaussian
in beta_n for t > 0; at t = 0 the series represents a delta ring and does not
converge pointwise, which is signalled with :class:`UnconvergedSeriesWarning`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import ChannelParams, flow_velocity
from .specfun import DomainError, bessel_j0, bessel_j1, j1_zeros

DEFAULT_TRUNCATION = 60
MAX_MODES = 20000
AMPLITUDE_TOL = 1e-12
K_GRID_POINTS = 1024


class UnconvergedSeriesWarning(RuntimeWarning):
    """The truncated series cannot meet its amplitude tolerance at this time."""


@lru_cache(maxsize=64)
def _mode_table(d: float, d0: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    betas = j1_zeros(count)
    coeffs = bessel_j0(betas * (d0 / d)) / (math.pi * d * d * bessel_j0(betas) ** 2)
    betas.setflags(write=False)
    coeffs.setflags(write=False)
    return betas, coeffs


@dataclass(frozen=True, eq=False)
class RadialSeries:
    """Truncated eigen-expansion for one channel.

    ``betas[0] == 0`` and ``coeffs[0] == 1 / (pi d^2)`` carry the uniform
    mode. Evaluations extend past ``truncation`` automatically when the
    requested time is too early for it.
    """

    params: ChannelParams
    betas: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    truncation: int


def build_series(params: ChannelParams, truncation: int = DEFAULT_TRUNCATION) -> RadialSeries:
    if truncation < 1:
        raise DomainError(f"truncation must be >= 1, got {truncation}")
    betas, coeffs = _mode_table(params.d, params.d0, int(truncation))
    all_betas = np.concatenate([[0.0], betas])
    all_coeffs = np.concatenate([[1.0 / (math.pi * params.d**2)], coeffs])
    all_betas.setflags(write=False)
    all_coeffs.setflags(write=False)
    return RadialSeries(params, all_betas, all_coeffs, int(truncation))


def modes_needed(series: RadialSeries, t: float) -> int:
    """Number of non-uniform modes needed at time ``t``.

    Uses the envelope ``|C_n| pi d^2 <= 1/J0(beta_n)^2 <= pi beta_n / 2 + 1``
    so the count does not depend on accidental near-zeros of ``J0(beta_n d0/d)``.
    """
    p = series.params
    if t <= 0:
        warnings.warn(
            f"series does not converge pointwise at t={t}; returning the "
            f"{series.truncation}-mode partial sum",
            UnconvergedSeriesWarning,
            stacklevel=3,
        )
        return series.truncation
    rate = p.D * t / p.d**2
    n = np.arange(1, MAX_MODES + 1)
    beta_approx = (n + 0.25) * np.pi
    envelope = (0.5 * np.pi * beta_approx + 1.0) * np.exp(-beta_approx**2 * rate)
    below = np.nonzero(envelope < AMPLITUDE_TOL)[0]
    if below.size == 0:
        warnings.warn(
            f"t={t} needs more than {MAX_MODES} modes; result is truncated",
            UnconvergedSeriesWarning,
            stacklevel=3,
        )
        return MAX_MODES
    return max(series.truncation, int(below[0]) + 1)


def _modes(series: RadialSeries, t: float) -> tuple[np.ndarray, np.ndarray]:
    count = modes_needed(series, t)
    if count <= series.truncation:
        return series.betas[1 : count + 1], series.coeffs[1 : count + 1]
    return _mode_table(series.params.d, series.params.d0, count)


def _check_r(series: RadialSeries, r) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > series.params.d):
        raise DomainError(f"radial position must lie in [0, {series.params.d}]")
    return arr


def _check_t(t) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"time must be finite and >= 0, got {t}")
    return t


def _out(arr: np.ndarray, like: np.ndarray):
    return float(arr) if like.ndim == 0 else arr


def radial_density(series: RadialSeries, r, t: float):
    """Probability density per unit area, P(r, t) [1/m^2]."""
    r_arr = _check_r(series, r)
    t = _check_t(t)
    p = series.params
    betas, coeffs = _modes(series, t)
    weights = coeffs * np.exp(-(betas**2) * p.D * t / p.d**2)
    modes = bessel_j0(np.multiply.outer(r_arr, betas / p.d))
    return _out(series.coeffs[0] + modes @ weights, r_arr)


def radial_pdf(series: RadialSeries, r, t: float):
    """Density of the radial coordinate, p(r, t) = 2 pi r P(r, t) [1/m]."""
    r_arr = _check_r(series, r)
    return _out(2.0 * math.pi * r_arr * np.asarray(radial_density(series, r_arr, t)), r_arr)


def _cdf_kernels(series: RadialSeries, r_arr: np.ndarray, betas, coeffs) -> np.ndarray:
    # integral of 2 pi r' C_n J0(beta_n r'/d) over [0, r]
    d = series.params.d
    scale = 2.0 * math.pi * coeffs * d / betas
    return (r_arr[..., None] * bessel_j1(np.multiply.outer(r_arr, betas / d))) * scale


def radial_cdf(series: RadialSeries, r, t: float):
    """Probability that the radial coordinate is at most ``r`` at time ``t``."""
    r_arr = _check_r(series, r)
    t = _check_t(t)
    p = series.params
    betas, coeffs = _modes(series, t)
    decay = np.exp(-(betas**2) * p.D * t / p.d**2)
    value = (r_arr / p.d) ** 2 + _cdf_kernels(series, r_arr, betas, coeffs) @ decay
    return _out(value, r_arr)


def _steady_cdf_excess(params: ChannelParams, r: np.ndarray) -> np.ndarray:
    """Integral over all time of ``radial_cdf(r, t) - r^2/d^2``.

    Closed form from the zero-mean Neumann Green's function of the disk;
    equals ``sum_n K_n(r) / a_n`` with ``a_n = beta_n^2 D / d^2``.
    """
    d, d0 = params.d, params.d0
    safe_r = np.where(r > 0, r, 1.0)
    inner = 0.5 * r**2 * math.log(d0 / d) if d0 > 0 else np.zeros_like(r)
    outer = 0.5 * r**2 * np.log(safe_r / d) - 0.25 * (r**2 - d0**2)
    log_part = np.where(r > d0, outer, inner)
    log_part = np.where(r > 0, log_part, 0.0)
    return (
        r**4 / (8.0 * d**2)
        - log_part
        - (r / d) ** 2 * (d**2 / 8.0 + 0.25 * (d**2 - d0**2))
    ) / params.D


def radial_cdf_time_average(series: RadialSeries, r, t: float):
    """Time average of ``radial_cdf(r, tau)`` over ``tau`` in [0, t].

    The slowly converging part of the term-wise integral is replaced by its
    steady closed form, so only exponentially decaying terms are summed.
    """
    r_arr = _check_r(series, r)
    t = _check_t(t)
    if t == 0:
        raise DomainError("time average needs t > 0")
    p = series.params
    betas, coeffs = _modes(series, t)
    rates = betas**2 * p.D / p.d**2
    transient = _cdf_kernels(series, r_arr, betas, coeffs) @ (np.exp(-rates * t) / rates)
    value = (r_arr / p.d) ** 2 + (_steady_cdf_excess(p, r_arr) - transient) / t
    return _out(value, r_arr)


def bound_constant(series: RadialSeries, n_points: int = K_GRID_POINTS) -> float:
    """Maximum over r of |J0(beta_1 d0/d) J0(beta_1 r/d)| / J0(beta_1)^2."""
    p = series.params
    beta1 = series.betas[1]
    r = np.linspace(0.0, p.d, n_points)
    ratio = bessel_j0(beta1 * p.d0 / p.d) * bessel_j0(beta1 * r / p.d) / bessel_j0(beta1) ** 2
    return float(np.max(np.abs(ratio)))


def uniformity_time(series: RadialSeries, eps: float = 1e-2, k: float | None = None) -> float:
    """Time after which the leading non-uniform mode is below ``eps``.

    Returns ``d^2 / (D beta_1^2) * ln(k / eps)`` where ``k`` defaults to
    :func:`bound_constant`. Passing ``k=1`` gives the order-of-magnitude
    estimate close to ``d^2 / (3 D)`` for ``eps = 1e-2``.
    """
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    p = series.params
    if k is None:
        k = bound_constant(series)
    if k <= eps:
        return 0.0
    return p.d**2 / (p.D * series.betas[1] ** 2) * math.log(k / eps)


def uniformity_deviation(series: RadialSeries, t: float, n_points: int = K_GRID_POINTS) -> float:
    """Measured sup over r of |P(r, t) pi d^2 - 1| on a uniform grid."""
    p = series.params
    r = np.linspace(0.0, p.d, n_points)
    density = radial_density(series, r, t)
    return float(np.max(np.abs(density * math.pi * p.d**2 - 1.0)))


def mean_flow_velocity(series: RadialSeries, t: float) -> float:
    """Ensemble-mean axial flow velocity at time ``t`` [m/s].

    Each non-uniform mode contributes ``-4 v_m J0(beta_n d0/d) /
    (beta_n^2 J0(beta_n))`` times its decay factor; the uniform mode gives
    ``v_m / 2``.
    """
    t = _check_t(t)
    p = series.params
    if t == 0:
        return flow_velocity(p, p.d0)
    betas, _ = _modes(series, t)
    weights = _velocity_weights(p, betas)
    value = p.v_m * 0.5 + weights @ np.exp(-(betas**2) * p.D * t / p.d**2)
    return float(np.clip(value, 0.0, p.v_m))


def _velocity_weights(params: ChannelParams, betas: np.ndarray) -> np.ndarray:
    s = params.d0 / params.d
    return -4.0 * params.v_m * bessel_j0(betas * s) / (betas**2 * bessel_j0(betas))
