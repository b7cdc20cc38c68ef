"""Axial displacement statistics and the receiver hit curve.

Two regimes are stitched at the uniformity time t* = d^2 / (3 D):

* ``t > t*``: the radial law is uniform and the axial position is Gaussian
  with mean ``expected_displacement(t)`` and variance ``2 D_e t``.
* ``t <= t*``: a molecule is counted when its time-averaged flow velocity
  plus the diffusive displacement ``U ~ N(0, 2 D t)`` over ``t`` reaches
  ``x_r / t``; the velocity law comes from the time-averaged radial CDF
  evaluated at the critical radius ``r*(t, u)``.

With ``v_m == 0`` everything reduces to 1-D free diffusion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, DerivedNumbers, derive_numbers, t_floor
from .radial import (
    DEFAULT_TRUNCATION,
    RadialSeries,
    _modes,
    _velocity_weights,
    build_series,
    mean_flow_velocity,
    radial_cdf_time_average,
)
from .specfun import (
    DomainError,
    QuadratureSpec,
    integrate_1d,
    std_normal_cdf,
    std_normal_pdf,
)

DEFAULT_U_TRUNC = 6.0


@dataclass(frozen=True, eq=False)
class AxialModel:
    series: RadialSeries
    derived: DerivedNumbers
    quad: QuadratureSpec
    u_trunc: float
    t_grid: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.u_trunc < 4:
            raise ValueError(f"u_trunc must be >= 4, got {self.u_trunc}")
        grid = np.array(self.t_grid, dtype=float)
        if grid.ndim != 1:
            raise ValueError("t_grid must be one-dimensional")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        floor = t_floor(self.params)
        if grid.size and grid[0] < floor * (1 - 1e-12):
            raise ValueError(f"t_grid must start at or after t_floor={floor!r}, got {grid[0]!r}")
        grid.setflags(write=False)
        object.__setattr__(self, "t_grid", grid)

    @property
    def params(self) -> ChannelParams:
        return self.series.params


def time_grid(start: float, stop: float, step: float) -> np.ndarray:
    """``start, start + step, ...`` up to and including ``stop`` (to 1e-9 steps)."""
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    if stop < start:
        return np.empty(0)
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def build_model(
    params: ChannelParams,
    t_grid=None,
    *,
    truncation: int = DEFAULT_TRUNCATION,
    quad: QuadratureSpec | None = None,
    u_trunc: float = DEFAULT_U_TRUNC,
) -> AxialModel:
    if t_grid is None:
        t_grid = time_grid(t_floor(params), 2.0, 0.01)
    return AxialModel(
        series=build_series(params, truncation),
        derived=derive_numbers(params),
        quad=quad or QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9),
        u_trunc=float(u_trunc),
        t_grid=t_grid,
    )


def _excess_displacement(params: ChannelParams) -> float:
    """Limit of ``x_exp(t) - v_m t / 2`` as t grows (closed form)."""
    s2 = (params.d0 / params.d) ** 2
    return params.v_m * params.d**2 / params.D * (1.0 / 24.0 - s2 / 8.0 + s2 * s2 / 16.0)


def _check_times(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("times must be finite and >= 0")
    return arr


def _expected_displacement_closed(model: AxialModel, t: np.ndarray) -> np.ndarray:
    p = model.params
    positive = t[t > 0]
    if positive.size == 0:
        return np.zeros_like(t)
    betas, _ = _modes(model.series, float(positive.min()))
    rates = betas**2 * p.D / p.d**2
    weights = _velocity_weights(p, betas) / rates
    transient = np.exp(-np.multiply.outer(t, rates)) @ weights
    x = 0.5 * p.v_m * t + _excess_displacement(p) - transient
    return np.where(t > 0, x, 0.0)


def _expected_displacement_quad(model: AxialModel, t: float) -> float:
    # below t_floor the wall is not yet felt; use the free-plane mean
    # E[r^2] = d0^2 + 4 D tau there
    p = model.params
    tf = min(t, t_floor(p))
    head = p.v_m * ((1.0 - (p.d0 / p.d) ** 2) * tf - 2.0 * p.D * tf**2 / p.d**2)
    if t <= tf:
        return head
    body = integrate_1d(lambda tau: mean_flow_velocity(model.series, tau), tf, t, model.quad)
    return head + body


def expected_displacement(model: AxialModel, t, method: str = "closed"):
    """Mean axial displacement ``x_exp(t)`` of a released molecule [m].

    ``method="closed"`` sums the modes in closed form with the
    non-decaying part resummed exactly; ``method="quadrature"`` integrates
    :func:`mean_flow_velocity` numerically.
    """
    arr = _check_times(t)
    if method == "closed":
        out = _expected_displacement_closed(model, np.atleast_1d(arr)).reshape(arr.shape)
    elif method == "quadrature":
        out = np.array([_expected_displacement_quad(model, float(v)) for v in arr.ravel()])
        out = out.reshape(arr.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out) if arr.ndim == 0 else out


def _uses_uniform_branch(model: AxialModel, t: float) -> bool:
    return model.params.v_m == 0 or t > model.derived.t_star


def _gaussian_moments(model: AxialModel, t):
    p = model.params
    if p.v_m == 0:
        return np.zeros_like(np.asarray(t, dtype=float)), np.sqrt(2.0 * p.D * t)
    return expected_displacement(model, t), np.sqrt(2.0 * model.derived.d_e * t)


def axial_cdf_uniform(model: AxialModel, x, t: float):
    """P(X_t <= x) under the Gaussian (radially uniform) axial law."""
    t = float(t)
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    mean, sigma = _gaussian_moments(model, t)
    return std_normal_cdf((np.asarray(x, dtype=float) - mean) / sigma)


def required_velocity(model: AxialModel, t: float) -> float:
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    return model.params.x_r / t


def critical_radius(model: AxialModel, t: float, u):
    """Radius at or inside which the flow (plus displacement ``u``) reaches x_r by ``t``.

    Clamped to [0, d]: 0 means no radius is fast enough, d means every
    radius is.
    """
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    p = model.params
    u_arr = np.asarray(u, dtype=float)
    if p.v_m == 0:
        out = np.where(u_arr >= p.x_r, p.d, 0.0)
    else:
        frac = 1.0 - (p.x_r - u_arr) / (p.v_m * t)
        out = p.d * np.sqrt(np.clip(frac, 0.0, 1.0))
    return float(out) if u_arr.ndim == 0 else out


def prob_velocity_exceeds(model: AxialModel, t: float) -> float:
    """Probability that the molecule has passed the receiver by ``t``.

    Integrates the time-averaged radial CDF at ``r*(t, u)`` against the
    diffusive displacement density over ``|u| <= u_trunc * sqrt(2 D t)``.
    The part ``u >= x_r`` (every radius suffices) is added exactly. The
    remaining u-integral is taken in the variable ``rho = r*/d``, where
    ``u = x_r - v_m t (1 - rho^2)``; this removes the square-root kink.
    """
    t = float(t)
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    p = model.params
    sigma = math.sqrt(2.0 * p.D * t)
    tail = std_normal_cdf(-p.x_r / sigma)
    if p.v_m == 0:
        return tail

    span = p.v_m * t
    u_lo = max(p.x_r - span, -model.u_trunc * sigma)
    u_hi = min(p.x_r, model.u_trunc * sigma)
    if u_lo >= u_hi:
        return float(min(max(tail, 0.0), 1.0))

    def rho_of(u):
        return math.sqrt(min(max(1.0 - (p.x_r - u) / span, 0.0), 1.0))

    def integrand(rho):
        rho = np.asarray(rho, dtype=float)
        u = p.x_r - span * (1.0 - rho * rho)
        weight = std_normal_pdf(u / sigma) / sigma * 2.0 * span * rho
        return weight * radial_cdf_time_average(model.series, p.d * np.clip(rho, 0.0, 1.0), t)

    a, b = rho_of(u_lo), rho_of(u_hi)
    cuts = {a, b}
    for u in (-2.0 * sigma, 0.0, 2.0 * sigma):
        cuts.add(rho_of(u))
    cuts.add(p.d0 / p.d)
    points = sorted(c for c in cuts if a <= c <= b)
    body = sum(
        integrate_1d(integrand, lo, hi, model.quad)
        for lo, hi in zip(points[:-1], points[1:])
        if hi > lo
    )
    return float(min(max(body + tail, 0.0), 1.0))


def _uniform_hits(model: AxialModel, t: float) -> float:
    return 1.0 - float(axial_cdf_uniform(model, model.params.x_r, t))


def cumulative_hits(model: AxialModel, t):
    """Fraction of molecules observed by the receiver by time ``t`` (N_hit).

    Hard switch at t*: velocity-exceedance probability up to and including
    t*, the Gaussian axial law after it.
    """
    arr = _check_times(t)
    out = np.empty(arr.size)
    for i, ti in enumerate(arr.ravel()):
        if ti == 0:
            out[i] = 0.0
        elif _uses_uniform_branch(model, ti):
            out[i] = _uniform_hits(model, ti)
        else:
            out[i] = prob_velocity_exceeds(model, ti)
    out = np.clip(out, 0.0, 1.0).reshape(arr.shape)
    return float(out) if arr.ndim == 0 else out


def branch_gap(model: AxialModel) -> float:
    """Jump of N_hit across t* between the two branches."""
    t_star = model.derived.t_star
    if model.params.v_m == 0:
        return 0.0
    return abs(prob_velocity_exceeds(model, t_star) - _uniform_hits(model, t_star))


def _uniform_rate(model: AxialModel, t: float) -> float:
    p = model.params
    mean, sigma = _gaussian_moments(model, t)
    velocity = 0.0 if p.v_m == 0 else mean_flow_velocity(model.series, t)
    z = (p.x_r - mean) / sigma
    return float(std_normal_pdf(z) * (velocity / sigma + z / (2.0 * t)))


def hit_rate(model: AxialModel) -> tuple[np.ndarray, np.ndarray]:
    """Impulse response n_hit on ``model.t_grid`` [1/s].

    Closed-form derivative on the Gaussian branch; central differences of
    the velocity-exceedance probability (step ``h``) before t*.
    """
    grid = model.t_grid
    if grid.size < 3:
        raise ValueError("hit_rate needs at least 3 grid points")
    h = min(1e-3, 0.25 * float(np.min(np.diff(grid))))
    rates = np.empty(grid.size)
    for i, t in enumerate(grid):
        t = float(t)
        if _uses_uniform_branch(model, t):
            rates[i] = _uniform_rate(model, t)
        elif t - h > 0:
            rates[i] = (prob_velocity_exceeds(model, t + h) - prob_velocity_exceeds(model, t - h)) / (2 * h)
        else:
            rates[i] = (prob_velocity_exceeds(model, t + h) - prob_velocity_exceeds(model, t)) / h
    return grid.copy(), rates
