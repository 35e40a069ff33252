"""Monte-Carlo harness: sweeps, baseline modes and tidy CSV output.

Modes share the engine: `faris` runs the full alternation; `fris_mode`
restricts it to passive unit-modulus reflection (gain bound 1, power budget
vacuous); `aris_mode` pins the port set to a centered block and optimizes
only the reflect vector; `bfs` runs the exhaustive oracle. Paired-seed
discipline: every mode derives its channel set from the same
master_seed + trial recipe, so comparative scenarios see identical fading.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import ao_driver
from .ao_driver import OuterConfig
from .channel import SurfaceGeometry, SystemParams, element_positions
from .errors import FarisError, ValidationError
from .oracle import BfsConfig, bfs
from .reformulation import PortSelection, build_selection

CSV_FIELDS = ("scenario", "mode", "sweep_var", "sweep_value", "trial", "seed",
              "rate_bps_hz", "outer_iters", "wall_time_s")
MODES = ("faris", "fris_mode", "aris_mode", "bfs")
SWEEP_VARS = ("tx_power_dbm", "M", "w_x", "none")


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: str
    geom: SurfaceGeometry
    params: SystemParams
    m_o: int
    outer: OuterConfig = field(default_factory=OuterConfig)
    sweep_var: str = "none"
    sweep_values: tuple = ()
    trials: int = 1
    bfs_cfg: BfsConfig = field(default_factory=BfsConfig)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.sweep_var not in SWEEP_VARS:
            raise ValidationError(
                f"unknown sweep_var {self.sweep_var!r}; expected one of {SWEEP_VARS}")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        vals = tuple(self.sweep_values)
        if self.sweep_var == "none":
            if vals:
                raise ValidationError("sweep_values must be empty when sweep_var='none'")
        else:
            if not vals:
                raise ValidationError("sweep_values must be nonempty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValidationError("sweep_values must be strictly increasing")
        object.__setattr__(self, "sweep_values", vals)


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    mode: str
    sweep_var: str
    sweep_value: float | None
    trial: int
    seed: int
    rate_bps_hz: float
    outer_iters: int
    wall_time_s: float

    def as_csv(self) -> list[str]:
        sv = "" if self.sweep_value is None else format(self.sweep_value, ".12g")
        rate = "nan" if math.isnan(self.rate_bps_hz) else format(self.rate_bps_hz, ".12g")
        return [self.scenario, self.mode, self.sweep_var, sv, str(self.trial),
                str(self.seed), rate, str(self.outer_iters),
                format(self.wall_time_s, ".6f")]


def centered_selection(geom: SurfaceGeometry, m_o: int) -> PortSelection:
    """Deterministic centered port block: an exact k x k square when m_o is a
    fitting perfect square, otherwise the m_o grid cells closest to the
    surface center (ties by lowest index)."""
    m = geom.m
    if not 1 <= m_o <= m:
        raise ValidationError(f"need 1 <= m_o <= M, got m_o={m_o}, M={m}")
    k = math.isqrt(m_o)
    if k * k == m_o and k <= geom.m_x and k <= geom.m_y:
        r0 = (geom.m_y - k) // 2
        c0 = (geom.m_x - k) // 2
        idx = [(r0 + r) * geom.m_x + (c0 + c) for r in range(k) for c in range(k)]
        return build_selection(idx, m)
    pos = element_positions(geom)
    d2 = (pos ** 2).sum(axis=1)
    order = np.lexsort((np.arange(m), d2))
    return build_selection(np.sort(order[:m_o]), m)


def _apply_sweep(geom: SurfaceGeometry, params: SystemParams, sweep_var: str,
                 value: float) -> tuple[SurfaceGeometry, SystemParams]:
    if sweep_var == "none":
        return geom, params
    if sweep_var == "tx_power_dbm":
        return geom, replace(params, tx_power_dbm=float(value))
    if sweep_var == "M":
        m_x = math.isqrt(int(value))
        if m_x * m_x != int(value):
            raise ValidationError(f"swept M={value} is not a perfect square")
        return SurfaceGeometry(m_x=m_x, w_x=geom.w_x,
                               wavelength=geom.wavelength), params
    if sweep_var == "w_x":
        return replace(geom, w_x=float(value)), params
    raise ValidationError(f"unknown sweep_var {sweep_var!r}")


def run_trial(sc: Scenario, geom: SurfaceGeometry, params: SystemParams,
              seed: int) -> tuple[float, int]:
    """One (mode, seed) run; returns (rate, outer iterations)."""
    outer = replace(sc.outer, seed=seed)
    if sc.mode == "faris":
        res = ao_driver.run(geom, params, sc.m_o, outer)
        return res.rate_star, res.iteration_count
    if sc.mode == "fris_mode":
        passive = replace(params, g_max_db=0.0, p_max_dbm=math.inf)
        res = ao_driver.run(geom, passive, sc.m_o, outer, unit_modulus=True)
        return res.rate_star, res.iteration_count
    if sc.mode == "aris_mode":
        block = centered_selection(geom, sc.m_o)
        res = ao_driver.run(geom, params, sc.m_o, outer, fixed_selection=block)
        return res.rate_star, res.iteration_count
    if sc.mode == "bfs":
        channels = ao_driver.channels_for_seed(geom, params, outer.saa_samples, seed)
        _, _, rate = bfs(geom, params, sc.m_o, channels, sc.bfs_cfg)
        return rate, 0
    raise ValidationError(f"unknown mode {sc.mode!r}")


def run_scenario(sc: Scenario, out_sink) -> dict:
    """Run all (sweep value, trial) cells, streaming rows to the CSV sink.

    A failed trial is recorded as a NaN-rate marker row (outer_iters = -1)
    and the scenario continues. Returns per-sweep-value summary statistics.
    """
    writer = csv.writer(out_sink, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    values = sc.sweep_values if sc.sweep_var != "none" else (None,)
    rows: list[ResultRow] = []
    for value in values:
        geom_v, params_v = _apply_sweep(sc.geom, sc.params, sc.sweep_var, value) \
            if value is not None else (sc.geom, sc.params)
        for trial in range(sc.trials):
            seed = sc.outer.seed + trial
            t0 = time.perf_counter()
            try:
                rate, iters = run_trial(sc, geom_v, params_v, seed)
            except FarisError:
                rate, iters = math.nan, -1
            wall = time.perf_counter() - t0
            row = ResultRow(scenario=sc.name, mode=sc.mode,
                            sweep_var=sc.sweep_var, sweep_value=value,
                            trial=trial, seed=seed, rate_bps_hz=rate,
                            outer_iters=iters, wall_time_s=wall)
            writer.writerow(row.as_csv())
            rows.append(row)

    summary = {"scenario": sc.name, "mode": sc.mode, "sweep_var": sc.sweep_var,
               "trials": sc.trials, "per_value": []}
    for value in values:
        rates = np.array([r.rate_bps_hz for r in rows if r.sweep_value == value])
        ok = rates[~np.isnan(rates)]
        summary["per_value"].append({
            "sweep_value": value,
            "n_ok": int(ok.size),
            "n_failed": int(rates.size - ok.size),
            "mean_rate_bps_hz": float(ok.mean()) if ok.size else math.nan,
            "std_rate_bps_hz": float(ok.std(ddof=1)) if ok.size > 1 else 0.0,
        })
    return summary


def gap_cdf(rows_a: list[ResultRow], rows_b: list[ResultRow]) -> np.ndarray:
    """Empirical CDF of per-trial rate gaps (a - b) between paired scenarios.

    Both inputs must cover identical (sweep_value, trial) cells with matching
    seeds. Returns an (n, 2) array of (gap, cumulative fraction).
    """
    key = lambda r: (r.sweep_value, r.trial)
    a = {key(r): r for r in rows_a}
    b = {key(r): r for r in rows_b}
    if set(a) != set(b):
        raise ValidationError("scenarios do not cover identical (sweep value, trial) cells")
    gaps = []
    for k in sorted(a, key=lambda t: (t[0] is not None, t[0], t[1])):
        if a[k].seed != b[k].seed:
            raise ValidationError(
                f"seed mismatch at cell {k}: {a[k].seed} vs {b[k].seed}")
        gaps.append(a[k].rate_bps_hz - b[k].rate_bps_hz)
    gaps = np.sort(np.asarray(gaps))
    frac = np.arange(1, gaps.size + 1) / gaps.size
    return np.stack([gaps, frac], axis=1)
