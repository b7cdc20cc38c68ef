"""Shared fixtures: cached Monte Carlo ensembles and the acceptance log."""
from __future__ import annotations

import pytest

from microchannel import SimConfig, load_scenario, simulate

# Ensembles shared across modules. Each entry: preset, overrides, extra
# snapshot times, horizon. Axial snapshots feed the displacement checks.
ENSEMBLES = {
    "d5": ("pe_ll_pc", {}, (0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 1.0), 2.0),
    "d15": ("pe_sim_pc_15", {}, (0.2, 0.225, 2.0), 2.0),
    "d15_dt_half": ("pe_sim_pc_15", {"dt_s": 5e-4}, (), 2.0),
    "d40": ("pe_sim_pc_40", {}, (2.0, 8.0), 8.0),
    "d100": ("pc_ll_pe", {}, (), 2.0),
    "d15_offset": ("pe_sim_pc_15_offset", {}, (0.075, 0.1, 0.2, 0.5, 1.0, 2.0, 3.75), 3.75),
    "d40_offset": ("pe_sim_pc_40_offset", {}, (), 2.0),
}

_RESULTS: list[tuple[str, bool, str]] = []


class EnsembleCache:
    def __init__(self):
        self._runs = {}

    def config(self, key: str):
        preset, overrides, _, _ = ENSEMBLES[key]
        return load_scenario(preset, overrides)

    def get(self, key: str):
        if key not in self._runs:
            _, _, snaps, t_end = ENSEMBLES[key]
            cfg = self.config(key)
            sim_cfg = SimConfig(
                cfg.params, cfg.n_particles, cfg.dt, t_end, cfg.seed,
                tuple(sorted(set(snaps) | set(cfg.snapshot_times))),
            )
            self._runs[key] = (cfg, simulate(sim_cfg))
        return self._runs[key]


@pytest.fixture(scope="session")
def ensembles() -> EnsembleCache:
    return EnsembleCache()


@pytest.fixture(scope="session")
def criterion():
    """Record one acceptance line: ``criterion(label, ok, detail)``."""

    def record(label: str, ok: bool, detail: str) -> bool:
        _RESULTS.append((label, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
