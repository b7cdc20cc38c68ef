"""Scenario loading, analytic/Monte Carlo comparison runs and CSV output."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .axial import (
    AxialModel,
    branch_gap,
    build_model,
    cumulative_hits,
    hit_rate,
    time_grid,
)
from .channel import ChannelParams, DerivedNumbers, derive_numbers, t_floor
from .montecarlo import (
    SimConfig,
    SimResult,
    empirical_cumulative_hits,
    radial_histogram,
    simulate,
)
from .radial import radial_cdf, uniformity_time
from .specfun import ConvergenceError, QuadratureSpec

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """A scenario could not be loaded or validated."""


_BASE = {
    "x_r_m": 5e-3,
    "v_m_m_per_s": 10e-3,
    "D_m2_per_s": 1e-10,
    "d0_m": 0.0,
    "n_particles": 100_000,
    "dt_s": 1e-3,
    "t_end_s": 2.0,
    "seed": 20190101,
}

PRESETS: dict[str, dict[str, Any]] = {
    "pe_ll_pc": {**_BASE, "d_m": 5e-6},
    "pe_sim_pc_15": {**_BASE, "d_m": 15e-6, "snapshot_times_s": [0.2, 2.0]},
    "pe_sim_pc_20": {**_BASE, "d_m": 20e-6},
    "pe_sim_pc_40": {**_BASE, "d_m": 40e-6, "snapshot_times_s": [2.0]},
    "pc_ll_pe": {**_BASE, "d_m": 100e-6},
    "pe_sim_pc_15_offset": {**_BASE, "d_m": 15e-6, "d0_frac": 0.5},
    "pe_sim_pc_40_offset": {**_BASE, "d_m": 40e-6, "d0_frac": 0.25},
}

_KNOWN_KEYS = {
    "name", "preset", "d_m", "d0_m", "d0_frac", "x_r_m", "v_m_m_per_s", "D_m2_per_s",
    "n_particles", "dt_s", "t_end_s", "t_grid", "snapshot_times_s", "seed",
    "truncation", "quad", "eps", "radial_bins", "thresholds",
}
_THRESHOLD_KEYS = {"sup_norm_max", "branch_gap_max"}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    params: ChannelParams
    n_particles: int
    dt: float
    t_end: float
    t_grid: tuple[float, float, float]  # (start, stop, step) [s]
    snapshot_times: tuple[float, ...] = ()
    seed: int = 0
    truncation: int = 60
    quad: QuadratureSpec = field(default_factory=lambda: QuadratureSpec(1e-11, 1e-9))
    eps: float = 1e-2
    radial_bins: int = 30
    thresholds: tuple[tuple[str, float], ...] = ()

    def times(self) -> np.ndarray:
        return time_grid(*self.t_grid)


def _require(raw: dict, key: str, kind=float):
    if key not in raw:
        raise ScenarioError(f"missing field '{key}'")
    value = raw[key]
    try:
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if isinstance(value, bool):
            raise TypeError
        value = float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"field '{key}' must be a {kind.__name__}, got {value!r}") from None
    if not math.isfinite(value):
        raise ScenarioError(f"field '{key}' must be finite, got {value!r}")
    return value


def _build_config(raw: dict[str, Any], default_name: str) -> ScenarioConfig:
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ScenarioError(f"unknown field(s): {', '.join(sorted(unknown))}")

    d = _require(raw, "d_m")
    if d <= 0:
        raise ScenarioError(f"field 'd_m' must be > 0, got {d}")
    if "d0_frac" in raw:
        frac = _require(raw, "d0_frac")
        if not 0 <= frac < 1:
            raise ScenarioError(f"field 'd0_frac' (d0 / d) must lie in [0, 1), got {frac}")
        d0 = frac * d
    else:
        d0 = _require(raw, "d0_m")
    if not 0 <= d0 < d:
        raise ScenarioError(f"field 'd0_m' (d0) must satisfy 0 <= d0 < d_m={d}, got {d0}")
    checks = {"x_r_m": lambda v: v > 0, "v_m_m_per_s": lambda v: v >= 0, "D_m2_per_s": lambda v: v > 0}
    values = {}
    for key, ok in checks.items():
        values[key] = _require(raw, key)
        if not ok(values[key]):
            raise ScenarioError(f"field '{key}' is out of range: {values[key]}")
    params = ChannelParams(d=d, d0=d0, x_r=values["x_r_m"], v_m=values["v_m_m_per_s"], D=values["D_m2_per_s"])

    n_particles = _require(raw, "n_particles", int)
    if n_particles < 0:
        raise ScenarioError(f"field 'n_particles' must be >= 0, got {n_particles}")
    dt = _require(raw, "dt_s")
    if dt <= 0:
        raise ScenarioError(f"field 'dt_s' must be > 0, got {dt}")
    t_end = _require(raw, "t_end_s")
    if t_end < dt:
        raise ScenarioError(f"field 't_end_s' must be >= dt_s, got {t_end}")

    floor = t_floor(params)
    grid_raw = raw.get("t_grid", {})
    if not isinstance(grid_raw, dict):
        raise ScenarioError("field 't_grid' must be an object with start_s/stop_s/step_s")
    start = float(grid_raw.get("start_s", floor))
    stop = float(grid_raw.get("stop_s", t_end))
    step = float(grid_raw.get("step_s", 0.01))
    if start < floor * (1 - 1e-12):
        raise ScenarioError(f"field 't_grid.start_s' must be >= t_floor={floor!r}, got {start}")
    if step <= 0:
        raise ScenarioError(f"field 't_grid.step_s' must be > 0, got {step}")
    if stop > t_end:
        raise ScenarioError(f"field 't_grid.stop_s' must be <= t_end_s, got {stop}")

    snaps = raw.get("snapshot_times_s", [])
    if not isinstance(snaps, list):
        raise ScenarioError("field 'snapshot_times_s' must be a list")
    snapshot_times = tuple(float(s) for s in snaps)
    for s in snapshot_times:
        if not 0 <= s <= t_end:
            raise ScenarioError(f"field 'snapshot_times_s' entry {s} outside [0, t_end_s]")

    seed = _require(raw, "seed", int)
    if not 0 <= seed < 2**64:
        raise ScenarioError(f"field 'seed' must be a 64-bit unsigned integer, got {seed}")
    truncation = int(raw.get("truncation", 60))
    if truncation < 1:
        raise ScenarioError(f"field 'truncation' must be >= 1, got {truncation}")
    quad_raw = raw.get("quad", {})
    if not isinstance(quad_raw, dict):
        raise ScenarioError("field 'quad' must be an object")
    try:
        quad = QuadratureSpec(**{"abs_tol": 1e-11, "rel_tol": 1e-9, **quad_raw})
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"field 'quad': {exc}") from None
    eps = float(raw.get("eps", 1e-2))
    if not 0 < eps < 1:
        raise ScenarioError(f"field 'eps' must lie in (0, 1), got {eps}")
    radial_bins = int(raw.get("radial_bins", 30))
    if radial_bins < 1:
        raise ScenarioError(f"field 'radial_bins' must be >= 1, got {radial_bins}")
    thresholds_raw = raw.get("thresholds", {})
    if not isinstance(thresholds_raw, dict):
        raise ScenarioError("field 'thresholds' must be an object")
    bad = set(thresholds_raw) - _THRESHOLD_KEYS
    if bad:
        raise ScenarioError(f"field 'thresholds' has unknown key(s): {', '.join(sorted(bad))}")

    return ScenarioConfig(
        name=str(raw.get("name", default_name)),
        params=params,
        n_particles=n_particles,
        dt=dt,
        t_end=t_end,
        t_grid=(start, stop, step),
        snapshot_times=snapshot_times,
        seed=seed,
        truncation=truncation,
        quad=quad,
        eps=eps,
        radial_bins=radial_bins,
        thresholds=tuple(sorted((k, float(v)) for k, v in thresholds_raw.items())),
    )


def load_scenario(source: str | Path, overrides: dict[str, Any] | None = None) -> ScenarioConfig:
    """Load a preset by name or a JSON scenario file, then apply ``overrides``.

    A file may name a ``"preset"`` to inherit from. ``d0_frac`` (d0 / d)
    takes precedence over ``d0_m``.
    """
    source_str = str(source)
    if source_str in PRESETS:
        raw = dict(PRESETS[source_str])
        name = source_str
    else:
        path = Path(source_str)
        if not path.is_file():
            raise ScenarioError(
                f"unknown preset or missing file '{source_str}' "
                f"(presets: {', '.join(sorted(PRESETS))})"
            )
        try:
            loaded = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"malformed scenario file '{path}': {exc}") from None
        if not isinstance(loaded, dict):
            raise ScenarioError(f"malformed scenario file '{path}': top level must be an object")
        base = loaded.pop("preset", None)
        if base is not None and base not in PRESETS:
            raise ScenarioError(f"field 'preset' names unknown preset '{base}'")
        raw = {**PRESETS.get(base, {}), **loaded}
        if "d0_m" in loaded:
            raw.pop("d0_frac", None)
        name = path.stem
    if overrides:
        if "d0_m" in overrides:
            raw.pop("d0_frac", None)
        raw.update(overrides)
    return _build_config(raw, name)


@dataclass
class RadialComparison:
    t: float
    r: np.ndarray  # bin centres
    p_analytic: np.ndarray | None  # bin-averaged analytic density
    p_empirical: np.ndarray
    sup_deviation: float | None


@dataclass
class ComparisonReport:
    name: str
    params: ChannelParams
    derived: DerivedNumbers
    t_grid: np.ndarray
    nhit_analytic: np.ndarray | None
    Nhit_analytic: np.ndarray | None
    Nhit_empirical: np.ndarray | None
    sup_norm: float | None
    branch_gap: float | None
    uniformity_time: float | None
    monotonicity_violations: int | None
    radial: list[RadialComparison]
    config: ScenarioConfig

    @property
    def t_star(self) -> float:
        return self.derived.t_star

    def threshold_violations(self) -> list[str]:
        found = []
        for key, limit in self.config.thresholds:
            value = self.sup_norm if key == "sup_norm_max" else self.branch_gap
            if value is not None and value > limit:
                found.append(f"{key}: {value!r} > {limit!r}")
        return found

    def to_json(self) -> dict[str, Any]:
        p = self.params
        return {
            "name": self.name,
            "params": {
                "d_m": p.d,
                "d0_m": p.d0,
                "x_r_m": p.x_r,
                "v_m_m_per_s": p.v_m,
                "D_m2_per_s": p.D,
            },
            "pe": self.derived.pe,
            "pc": self.derived.pc,
            "d_e": self.derived.d_e,
            "t_star": self.derived.t_star,
            "t_floor": t_floor(p),
            "eps": self.config.eps,
            "uniformity_time": self.uniformity_time,
            "sup_norm": self.sup_norm,
            "branch_gap": self.branch_gap,
            "monotonicity_violations": self.monotonicity_violations,
            "n_particles": self.config.n_particles,
            "dt": self.config.dt,
            "t_end": self.config.t_end,
            "seed": self.config.seed,
            "t_grid_points": int(self.t_grid.size),
            "radial": [
                {"t": rc.t, "sup_deviation": rc.sup_deviation, "file": _radial_filename(rc.t)}
                for rc in self.radial
            ],
            "threshold_violations": self.threshold_violations(),
        }


def _radial_filename(t: float) -> str:
    return f"radial_{t:g}.csv"


def _radial_comparisons(config: ScenarioConfig, sim: SimResult, model: AxialModel | None):
    out = []
    for t in config.snapshot_times:
        edges, density = radial_histogram(sim, t, config.radial_bins)
        centres = 0.5 * (edges[:-1] + edges[1:])
        analytic = None
        sup = None
        if model is not None and t >= t_floor(config.params):
            cdf = np.asarray(radial_cdf(model.series, edges, t))
            analytic = np.diff(cdf) / np.diff(edges)
            sup = float(np.max(np.abs(density - analytic)))
        out.append(RadialComparison(t, centres, analytic, density, sup))
    return out


def run_compare(
    config: ScenarioConfig,
    *,
    analytic: bool = True,
    workers: int = 1,
) -> ComparisonReport:
    """Run the analytic pipeline and (if ``n_particles > 0``) the simulator.

    Errors are re-raised with the scenario name attached.
    """
    try:
        return _run(config, analytic, workers)
    except ConvergenceError as exc:
        raise ConvergenceError(f"scenario '{config.name}': {exc}", exc.estimate, exc.error) from exc


def _run(config: ScenarioConfig, analytic: bool, workers: int) -> ComparisonReport:
    grid = config.times()
    derived = derive_numbers(config.params)
    model = None
    n_rate = n_cum = gap = t_unif = violations = None
    if analytic:
        model = build_model(config.params, grid, truncation=config.truncation, quad=config.quad)
        n_cum = np.asarray(cumulative_hits(model, grid), dtype=float)
        n_rate = hit_rate(model)[1] if grid.size >= 3 else np.full(grid.size, np.nan)
        gap = branch_gap(model)
        t_unif = uniformity_time(model.series, config.eps)
        early = grid <= derived.t_star
        violations = int(np.sum(np.diff(n_cum[early]) < 0)) if early.sum() > 1 else 0

    empirical = None
    radial: list[RadialComparison] = []
    if config.n_particles > 0:
        sim = simulate(
            SimConfig(
                config.params,
                config.n_particles,
                config.dt,
                config.t_end,
                config.seed,
                config.snapshot_times,
            ),
            workers=workers,
        )
        empirical = empirical_cumulative_hits(sim, grid)
        radial = _radial_comparisons(config, sim, model)

    sup = None
    if n_cum is not None and empirical is not None:
        sup = float(np.max(np.abs(n_cum - empirical))) if grid.size else 0.0
    return ComparisonReport(
        name=config.name,
        params=config.params,
        derived=derived,
        t_grid=grid,
        nhit_analytic=n_rate,
        Nhit_analytic=n_cum,
        Nhit_empirical=empirical,
        sup_norm=sup,
        branch_gap=gap,
        uniformity_time=t_unif,
        monotonicity_violations=violations,
        radial=radial,
        config=config,
    )


def _fmt(value) -> str:
    # repr round-trips float64 exactly (17 significant digits)
    return "" if value is None else repr(float(value))


def _column(values: np.ndarray | None, i: int) -> str:
    return "" if values is None else _fmt(values[i])


def write_csv(report: ComparisonReport, out_dir: str | Path) -> list[Path]:
    """Write ``nhit.csv``, one ``radial_<t>.csv`` per snapshot and ``report.json``."""
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / "nhit.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "nhit_analytic", "Nhit_analytic", "Nhit_empirical"])
            for i, t in enumerate(report.t_grid):
                writer.writerow([
                    _fmt(t),
                    _column(report.nhit_analytic, i),
                    _column(report.Nhit_analytic, i),
                    _column(report.Nhit_empirical, i),
                ])
        written.append(path)
        for rc in report.radial:
            path = out / _radial_filename(rc.t)
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["r", "p_analytic", "p_empirical"])
                for i, r in enumerate(rc.r):
                    writer.writerow([_fmt(r), _column(rc.p_analytic, i), _fmt(rc.p_empirical[i])])
            written.append(path)
        path = out / "report.json"
        path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
        written.append(path)
    except OSError as exc:
        raise OSError(f"failed writing outputs under '{out}': {exc}") from exc
    return written


@dataclass
class SweepError:
    source: str
    message: str


def sweep(
    items: Sequence[ScenarioConfig | str | Path],
    *,
    analytic: bool = True,
    workers: int = 1,
) -> list[ComparisonReport | SweepError]:
    """Run independent scenarios; output order follows input order.

    Items may be configs or preset names / file paths. A failing scenario
    yields a :class:`SweepError` in its slot and does not affect others.
    """

    def one(item):
        label = item.name if isinstance(item, ScenarioConfig) else str(item)
        try:
            config = item if isinstance(item, ScenarioConfig) else load_scenario(item)
            return run_compare(config, analytic=analytic)
        except Exception as exc:
            logger.error("scenario %s failed: %s", label, exc)
            return SweepError(label, str(exc))

    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, items))
    return [one(item) for item in items]
