"""Channel geometry, flow profile and derived dimensionless numbers.

All quantities are SI: metres, seconds, m^2/s.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .specfun import DomainError


@dataclass(frozen=True)
class ChannelParams:
    """Cylindrical channel with a point emitter and a full cross-section observer.

    Attributes:
        d: channel radius [m]
        d0: radial offset of the emitter from the axis [m]
        x_r: axial distance from emitter to the receiver plane [m]
        v_m: centreline (peak) Poiseuille velocity [m/s]
        D: molecular diffusion coefficient [m^2/s]
    """

    d: float
    d0: float
    x_r: float
    v_m: float
    D: float

    def __post_init__(self):
        for name in ("d", "d0", "x_r", "v_m", "D"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Real) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.d <= 0:
            raise ValueError(f"d must be > 0, got {self.d}")
        if not 0 <= self.d0 < self.d:
            raise ValueError(f"d0 must satisfy 0 <= d0 < d (d={self.d}), got {self.d0}")
        if self.x_r <= 0:
            raise ValueError(f"x_r must be > 0, got {self.x_r}")
        if self.v_m < 0:
            raise ValueError(f"v_m must be >= 0, got {self.v_m}")
        if self.D <= 0:
            raise ValueError(f"D must be > 0, got {self.D}")


@dataclass(frozen=True)
class DerivedNumbers:
    pe: float  # Peclet number
    pc: float  # critical Peclet number 4 x_r / d
    d_e: float  # Taylor-dispersion effective diffusion coefficient [m^2/s]
    t_star: float  # radial uniformity time d^2 / (3 D) [s]


def flow_velocity(params: ChannelParams, r):
    """Axial Poiseuille velocity ``v_m (1 - r^2/d^2)`` at radius ``r``."""
    arr = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > params.d):
        raise DomainError(f"radial position must lie in [0, {params.d}]")
    v = params.v_m * (1.0 - (arr / params.d) ** 2)
    return float(v) if arr.ndim == 0 else v


def derive_numbers(params: ChannelParams) -> DerivedNumbers:
    pe = params.v_m * params.d / (2.0 * params.D)
    return DerivedNumbers(
        pe=pe,
        pc=4.0 * params.x_r / params.d,
        d_e=params.D * (1.0 + pe * pe / 48.0),
        t_star=params.d**2 / (3.0 * params.D),
    )


def t_floor(params: ChannelParams) -> float:
    """Earliest time at which series-based quantities are trusted."""
    return 1e-4 * derive_numbers(params).t_star
