"""Configuration file handling for the CLI.

The file format is TOML with units spelled out in key names (_dbm, _db, _m,
_deg); unknown keys are rejected. All dB/dBm-to-linear conversion happens
once, when the parsed document is turned into parameter objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .active_reflect import InnerConfig
from .ao_driver import OuterConfig
from .channel import SurfaceGeometry, SystemParams, check_los_condition
from .errors import ConfigError
from .experiments import MODES, SWEEP_VARS, Scenario
from .oracle import BfsConfig
from .port_select import CemConfig

# (key, default, comment) per section; the single source of truth for
# defaults, validation and the generated reference document.
_SCHEMA: dict[str, list[tuple[str, object, str]]] = {
    "geometry": [
        ("m_x", 6, "ports per row (columns)"),
        ("m_y", 0, "rows; 0 means square (m_y = m_x)"),
        ("w_x", 2.0, "aperture in wavelengths along x"),
        ("wavelength_m", 0.06, "carrier wavelength [m]"),
    ],
    "system": [
        ("tx_power_dbm", 15.0, "BS transmit power [dBm]"),
        ("p_max_dbm", 25.0, "surface radiated-power budget [dBm]; inf disables"),
        ("g_max_db", 40.0, "per-element amplification power gain [dB]"),
        ("noise_ris_dbm", -90.0, "amplifier noise power at the surface [dBm]"),
        ("noise_mu_dbm", -90.0, "receiver noise power at the user [dBm]"),
        ("rician_k", 1.0, "Rician K-factor of the surface-user link"),
        ("l_f_m", 1.5, "BS-surface distance [m]; must stay below wavelength*M"),
        ("l_u_m", 15.0, "surface-user distance [m]"),
        ("pl_exp_f", 2.0, "path-loss exponent, BS-surface"),
        ("pl_exp_u", 2.2, "path-loss exponent, surface-user"),
        ("mu_azimuth_deg", 0.0, "user azimuth seen from the surface [deg]"),
        ("mu_elevation_deg", 0.0, "user elevation seen from the surface [deg]"),
    ],
    "run": [
        ("m_o", 9, "number of active ports"),
        ("saa_samples", 32, "channel samples S of the frozen average"),
        ("seed", 1, "master seed"),
    ],
    "inner": [
        ("eps_v", 1e-3, "reflect-loop convergence tolerance [bps/Hz]"),
        ("n_rand", 50, "Gaussian randomization candidates"),
        ("max_inner_iters", 50, ""),
        ("solver_tol", 1e-8, "subproblem relative objective tolerance"),
        ("rank_one_ratio_threshold", 1e-6, "lambda2/lambda1 acceptance ratio"),
    ],
    "cem": [
        ("n_mc", 0, "samples per iteration; 0 means 5 * M"),
        ("rho", 0.1, "elite fraction"),
        ("omega", 0.7, "smoothing factor"),
        ("eps_c", 1e-3, "convergence tolerance on ||delta p||"),
        ("max_cem_iters", 30, ""),
        ("nu_bisect_tol", 1e-10, "budget residual tolerance of the multiplier"),
    ],
    "outer": [
        ("eps_out", 1e-3, "outer convergence tolerance [bps/Hz]"),
        ("max_outer_iters", 40, ""),
    ],
    "bfs": [
        ("phase_bits", 2, "discrete phase resolution"),
        ("gain_levels", 4, "uniform gain grid size on [0, g_max]"),
        ("max_search_size", 2_000_000, "hard cap on enumerated configurations"),
        ("trials", 10, "paired trials for bfs-compare"),
    ],
}

_SCENARIO_KEYS = {
    "name": (str, None),
    "mode": (str, "faris"),
    "sweep_var": (str, "none"),
    "sweep_values": (list, []),
    "trials": (int, 1),
    "m_o": (int, 0),        # 0 -> inherit [run].m_o
}


@dataclass
class RunSpec:
    """Everything a CLI command needs, already validated and unit-converted."""

    geometry: SurfaceGeometry
    system: SystemParams
    m_o: int
    outer: OuterConfig
    bfs: BfsConfig
    bfs_trials: int
    scenarios: dict[str, Scenario] = field(default_factory=dict)


def _coerce(section: str, key: str, default, value):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"[{section}] {key} must be a boolean, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[{section}] {key} must be a number, got {value!r}")
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"[{section}] {key} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[{section}] {key} must be a number, got {value!r}")
        return float(value)
    return value


def _parse_sections(doc: dict) -> dict:
    """Merge the document over the defaults, rejecting unknown keys."""
    merged = {sec: {k: d for k, d, _ in entries} for sec, entries in _SCHEMA.items()}
    for sec, content in doc.items():
        if sec == "scenario":
            continue
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}] "
                              f"(expected one of {sorted(_SCHEMA)} or [[scenario]])")
        if not isinstance(content, dict):
            raise ConfigError(f"[{sec}] must be a table")
        known = merged[sec]
        for key, value in content.items():
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{sec}] "
                                  f"(known: {sorted(known)})")
            known[key] = _coerce(sec, key, dict((k, d) for k, d, _ in _SCHEMA[sec])[key],
                                 value)
    return merged


def _parse_scenarios(doc: dict, base: RunSpec) -> dict[str, Scenario]:
    out: dict[str, Scenario] = {}
    for i, raw in enumerate(doc.get("scenario", [])):
        if not isinstance(raw, dict):
            raise ConfigError("each [[scenario]] entry must be a table")
        vals = {}
        for key, value in raw.items():
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"unknown key {key!r} in [[scenario]] #{i + 1} "
                                  f"(known: {sorted(_SCENARIO_KEYS)})")
            vals[key] = value
        for key, (typ, default) in _SCENARIO_KEYS.items():
            vals.setdefault(key, default)
        if vals["name"] is None:
            raise ConfigError(f"[[scenario]] #{i + 1} is missing a name")
        if vals["mode"] not in MODES:
            raise ConfigError(f"scenario {vals['name']!r}: unknown mode "
                              f"{vals['mode']!r} (expected one of {MODES})")
        if vals["sweep_var"] not in SWEEP_VARS:
            raise ConfigError(f"scenario {vals['name']!r}: unknown sweep_var "
                              f"{vals['sweep_var']!r} (expected one of {SWEEP_VARS})")
        m_o = int(vals["m_o"]) or base.m_o
        sc = Scenario(name=str(vals["name"]), mode=str(vals["mode"]),
                      geom=base.geometry, params=base.system, m_o=m_o,
                      outer=base.outer, sweep_var=str(vals["sweep_var"]),
                      sweep_values=tuple(float(x) for x in vals["sweep_values"]),
                      trials=int(vals["trials"]), bfs_cfg=base.bfs)
        if sc.name in out:
            raise ConfigError(f"duplicate scenario name {sc.name!r}")
        out[sc.name] = sc
    return out


def _build(merged: dict, doc: dict) -> RunSpec:
    g = merged["geometry"]
    geometry = SurfaceGeometry(m_x=g["m_x"], w_x=g["w_x"],
                               wavelength=g["wavelength_m"],
                               m_y=g["m_y"] or None)
    s = merged["system"]
    system = SystemParams(
        tx_power_dbm=s["tx_power_dbm"], p_max_dbm=s["p_max_dbm"],
        g_max_db=s["g_max_db"], noise_ris_dbm=s["noise_ris_dbm"],
        noise_mu_dbm=s["noise_mu_dbm"], rician_k=s["rician_k"],
        l_f_m=s["l_f_m"], l_u_m=s["l_u_m"], pl_exp_f=s["pl_exp_f"],
        pl_exp_u=s["pl_exp_u"],
        mu_azimuth_rad=math.radians(s["mu_azimuth_deg"]),
        mu_elevation_rad=math.radians(s["mu_elevation_deg"]),
    )
    check_los_condition(geometry, system)
    inner = InnerConfig(**merged["inner"])
    cem = CemConfig(**merged["cem"])
    r = merged["run"]
    outer = OuterConfig(eps_out=merged["outer"]["eps_out"],
                        max_outer_iters=merged["outer"]["max_outer_iters"],
                        saa_samples=r["saa_samples"], seed=r["seed"],
                        inner=inner, cem=cem)
    b = merged["bfs"]
    bfs_cfg = BfsConfig(phase_bits=b["phase_bits"], gain_levels=b["gain_levels"],
                        max_search_size=b["max_search_size"])
    spec = RunSpec(geometry=geometry, system=system, m_o=r["m_o"], outer=outer,
                   bfs=bfs_cfg, bfs_trials=b["trials"])
    spec.scenarios = _parse_scenarios(doc, spec)
    return spec


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply repeatable --set key=value pairs onto a parsed document.

    Dotted keys address a section directly; bare keys are resolved if they
    are unique across sections.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, text = item.partition("=")
        key = key.strip()
        try:
            value = tomllib.loads(f"v = {text.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = text.strip()
        if "." in key:
            sec, _, name = key.partition(".")
        else:
            hits = [s for s, entries in _SCHEMA.items()
                    if any(k == key for k, _, _ in entries)]
            if len(hits) == 0:
                raise ConfigError(f"--set: unknown key {key!r}")
            if len(hits) > 1:
                raise ConfigError(f"--set: key {key!r} is ambiguous across "
                                  f"sections {hits}; use section.key")
            sec, name = hits[0], key
        doc.setdefault(sec, {})
        if not isinstance(doc[sec], dict):
            raise ConfigError(f"--set: [{sec}] is not a table")
        doc[sec][name] = value
    return doc


def load_config(path: str | Path, overrides: list[str] | None = None) -> RunSpec:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if overrides:
        doc = apply_overrides(doc, list(overrides))
    return _build(_parse_sections(doc), doc)


def default_spec(overrides: list[str] | None = None) -> RunSpec:
    doc = apply_overrides({}, list(overrides or []))
    return _build(_parse_sections(doc), doc)


def config_reference() -> str:
    """The fully commented default configuration document."""
    lines = ["# Reference configuration: every key with its default value.",
             "# Units are spelled out in key names (_dbm, _db, _m, _deg).", ""]
    for sec, entries in _SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, default, comment in entries:
            if isinstance(default, float) and math.isinf(default):
                value = "inf"
            else:
                value = repr(default) if not isinstance(default, str) else f'"{default}"'
            suffix = f"  # {comment}" if comment else ""
            lines.append(f"{key} = {value}{suffix}")
        lines.append("")
    lines += [
        "# Sweep scenarios are declared as repeated [[scenario]] tables:",
        "# [[scenario]]",
        '# name = "rate_vs_power"',
        '# mode = "faris"            # faris | fris_mode | aris_mode | bfs',
        '# sweep_var = "tx_power_dbm"  # tx_power_dbm | M | w_x | none',
        "# sweep_values = [5.0, 10.0, 15.0, 20.0, 25.0]",
        "# trials = 10",
        "# m_o = 0                   # 0 inherits [run].m_o",
        "",
    ]
    return "\n".join(lines)
