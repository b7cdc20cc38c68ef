"""Brownian particle simulator for the channel.

Each step moves a particle by ``dt * v(r) + sqrt(2 D dt) * n1`` along the
axis and ``sqrt(2 D dt) * (n2, n3)`` across it, with ``v`` taken at the
pre-step radius. A particle that leaves the cylinder is mirrored radially
(``rho -> 2 d - rho``, same angle). The receiver records the first time
``x >= x_r`` by linear interpolation inside the step; later recrossings are
ignored.

Particles are processed in fixed-size blocks, each with its own Philox
stream keyed by ``(seed, block index)``. Results therefore do not depend on
how many worker threads run the blocks.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams

logger = logging.getLogger(__name__)

BLOCK_SIZE = 8192


@dataclass(frozen=True)
class SimConfig:
    params: ChannelParams
    n_particles: int
    dt: float = 1e-3
    t_end: float = 2.0
    seed: int = 0
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ValueError(f"n_particles must be a positive integer, got {self.n_particles}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ValueError(f"t_end must be >= dt, got {self.t_end}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        times = tuple(float(s) for s in self.snapshot_times)
        for s in times:
            if not 0 <= s <= self.t_end:
                raise ValueError(f"snapshot_times must lie in [0, t_end], got {s}")
        object.__setattr__(self, "snapshot_times", times)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class ParticleState:
    """Positions of one or many particles (scalars or equal-length arrays)."""

    x: np.ndarray | float
    y: np.ndarray | float
    z: np.ndarray | float


@dataclass
class SimResult:
    """First crossing times (``inf`` = not yet) and per-snapshot positions.

    ``snapshots`` maps each requested time to the radial positions;
    ``axial_snapshots`` holds the matching axial positions.
    """

    first_cross: np.ndarray
    snapshots: dict[float, np.ndarray]
    axial_snapshots: dict[float, np.ndarray]
    params: ChannelParams
    meta: dict = field(default_factory=dict)


def _reflect(y: np.ndarray, z: np.ndarray, d: float) -> None:
    rho = np.hypot(y, z)
    out = rho > d
    while np.any(out):
        scale = (2.0 * d - rho[out]) / rho[out]
        y[out] *= scale
        z[out] *= scale
        rho = np.hypot(y, z)
        out = rho > d


def _advance(x, y, z, noise, params: ChannelParams, dt: float) -> None:
    """In-place vectorised step; ``noise`` has shape (3, n)."""
    sigma = math.sqrt(2.0 * params.D * dt)
    r2 = (y * y + z * z) / (params.d * params.d)
    x += dt * params.v_m * (1.0 - r2) + sigma * noise[0]
    y += sigma * noise[1]
    z += sigma * noise[2]
    _reflect(y, z, params.d)


def step(state: ParticleState, params: ChannelParams, dt: float, noise) -> ParticleState:
    """One Euler-Maruyama step driven by three standard-normal draws per particle."""
    x = np.array(state.x, dtype=float, ndmin=1)
    y = np.array(state.y, dtype=float, ndmin=1)
    z = np.array(state.z, dtype=float, ndmin=1)
    noise = np.asarray(noise, dtype=float).reshape(3, -1)
    _advance(x, y, z, noise, params, dt)
    if np.ndim(state.x) == 0:
        return ParticleState(float(x[0]), float(y[0]), float(z[0]))
    return ParticleState(x, y, z)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), block])))


def _snapshot_steps(config: SimConfig) -> dict[int, float]:
    return {int(round(s / config.dt)): s for s in config.snapshot_times}


def _simulate_block(config: SimConfig, block: int, count: int):
    p = config.params
    rng = _block_rng(config.seed, block)
    x = np.zeros(count)
    y = np.full(count, p.d0)
    z = np.zeros(count)
    first = np.full(count, np.inf)
    pending = np.ones(count, dtype=bool)
    snap_steps = _snapshot_steps(config)
    radial, axial = {}, {}
    if 0 in snap_steps:
        radial[snap_steps[0]] = np.hypot(y, z)
        axial[snap_steps[0]] = x.copy()
    dt = config.dt
    for k in range(1, config.n_steps + 1):
        noise = rng.standard_normal((3, count))
        x_prev = x.copy() if pending.any() else None
        _advance(x, y, z, noise, p, dt)
        if x_prev is not None:
            hit = pending & (x >= p.x_r)
            if hit.any():
                frac = (p.x_r - x_prev[hit]) / (x[hit] - x_prev[hit])
                first[hit] = (k - 1 + frac) * dt
                pending &= ~hit
        if k in snap_steps:
            radial[snap_steps[k]] = np.hypot(y, z)
            axial[snap_steps[k]] = x.copy()
    return first, radial, axial


def simulate(config: SimConfig, workers: int = 1) -> SimResult:
    """Run the particle ensemble described by ``config``.

    Output is a pure function of ``config``; ``workers`` only changes
    wall-clock time.
    """
    start = time.perf_counter()
    n = int(config.n_particles)
    blocks = [(b, min(BLOCK_SIZE, n - b * BLOCK_SIZE)) for b in range(math.ceil(n / BLOCK_SIZE))]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda bc: _simulate_block(config, *bc), blocks))
    else:
        parts = [_simulate_block(config, b, c) for b, c in blocks]
    first = np.concatenate([part[0] for part in parts])
    snapshots = {s: np.concatenate([part[1][s] for part in parts]) for s in config.snapshot_times}
    axial = {s: np.concatenate([part[2][s] for part in parts]) for s in config.snapshot_times}
    elapsed = time.perf_counter() - start
    logger.info("simulated %d particles x %d steps in %.1f s", n, config.n_steps, elapsed)
    meta = {
        "n_particles": n,
        "dt": config.dt,
        "t_end": config.t_end,
        "seed": int(config.seed),
        "wall_clock_s": elapsed,
    }
    return SimResult(first, snapshots, axial, config.params, meta)


def empirical_cumulative_hits(result: SimResult, t_grid) -> np.ndarray:
    """Fraction of particles whose first crossing is at or before each time."""
    grid = np.asarray(t_grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) < 0):
        raise ValueError("t_grid must be increasing")
    crossings = np.sort(result.first_cross)
    return np.searchsorted(crossings, grid, side="right") / crossings.size


def _lookup_snapshot(store: dict[float, np.ndarray], snapshot_time: float) -> np.ndarray:
    for s, values in store.items():
        if math.isclose(s, snapshot_time, rel_tol=1e-9, abs_tol=1e-12):
            return values
    raise KeyError(f"no snapshot recorded at t={snapshot_time}; available: {sorted(store)}")


def radial_histogram(result: SimResult, snapshot_time: float, n_bins: int):
    """Normalised histogram of radial positions over [0, d].

    Returns ``(edges, density)`` with ``sum(density * widths) == 1``.
    """
    radii = _lookup_snapshot(result.snapshots, snapshot_time)
    counts, edges = np.histogram(radii, bins=n_bins, range=(0.0, result.params.d))
    density = counts / (radii.size * np.diff(edges))
    return edges, density


def mean_axial_position(result: SimResult, snapshot_time: float) -> float:
    return float(np.mean(_lookup_snapshot(result.axial_snapshots, snapshot_time)))
