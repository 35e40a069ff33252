"""Command-line front end.

Subcommands: `run` (single optimization), `sweep` (named scenario from the
config), `bfs-compare` (paired exhaustive-search comparison) and
`config-reference` (print the documented defaults). All outputs are
machine-readable files under --out-dir; everything is deterministic under a
fixed seed except wall-time columns.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ao_driver, config, experiments
from .errors import ConfigError, NumericalError, ValidationError
from .oracle import bfs, search_space_size


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="TOML configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, default=None, help="override [run].seed")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for the harness (reserved; runs are "
                        "deterministic regardless)")
    p.add_argument("--out-dir", default="out", help="output directory")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="faris",
                                 description="Ergodic-rate optimization for "
                                             "fluid-active reflecting surfaces")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="single optimization run"))
    sp = sub.add_parser("sweep", help="run a named scenario sweep")
    _add_common(sp)
    sp.add_argument("--scenario", required=True, help="scenario name from the config")
    bp = sub.add_parser("bfs-compare", help="paired AO vs exhaustive search")
    _add_common(bp)
    bp.add_argument("--max-configs", type=int, default=None,
                    help="override [bfs].max_search_size")
    sub.add_parser("config-reference", help="print the documented default config")
    return ap


def _load(args) -> config.RunSpec:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    return config.load_config(args.config, overrides)


def _outdir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_run(args) -> int:
    spec = _load(args)
    out = _outdir(args)
    res = ao_driver.run(spec.geometry, spec.system, spec.m_o, spec.outer)
    _write_json(out / "result.json", {
        "seed": spec.outer.seed,
        "m": spec.geometry.m,
        "m_o": spec.m_o,
        "rate_bps_hz": res.rate_star,
        "selection": list(res.selection_star.indices),
        "v": [{"magnitude": float(np.abs(x)), "phase_rad": float(np.angle(x))}
              for x in res.v_star],
        "outer_trace": [float(r) for r in res.outer_trace],
        "iterations": res.iteration_count,
        "converged": res.converged,
    })
    with (out / "trace.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "rate_bps_hz"])
        for i, r in enumerate(res.outer_trace):
            w.writerow([i, format(r, ".12g")])
    active = set(res.selection_star.indices)
    with (out / "selection.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["port", "row", "col", "active"])
        for i in range(spec.geometry.m):
            w.writerow([i, i // spec.geometry.m_x, i % spec.geometry.m_x,
                        int(i in active)])
    print(f"rate {res.rate_star:.6g} bps/Hz after {res.iteration_count} outer "
          f"iterations (converged={res.converged}); results in {out}")
    return 0


def cmd_sweep(args) -> int:
    spec = _load(args)
    if args.scenario not in spec.scenarios:
        raise ConfigError(f"unknown scenario {args.scenario!r}; available: "
                          f"{sorted(spec.scenarios) or '(none defined)'}")
    sc = spec.scenarios[args.scenario]
    out = _outdir(args)
    csv_path = out / f"{sc.name}.csv"
    with csv_path.open("w", newline="") as fh:
        summary = experiments.run_scenario(sc, fh)
    _write_json(out / f"{sc.name}_summary.json", summary)
    print(f"scenario {sc.name!r}: wrote {csv_path} and summary JSON")
    return 0


def cmd_bfs_compare(args) -> int:
    spec = _load(args)
    if args.max_configs is not None:
        spec = replace_bfs(spec, args.max_configs)
    out = _outdir(args)
    total = search_space_size(spec.geometry.m, spec.m_o, spec.bfs)
    if total > spec.bfs.max_search_size:
        raise ValidationError(
            f"search space has {total} configurations, exceeding the cap "
            f"{spec.bfs.max_search_size}")
    pairs = []
    for trial in range(spec.bfs_trials):
        seed = spec.outer.seed + trial
        outer = replace(spec.outer, seed=seed)
        res = ao_driver.run(spec.geometry, spec.system, spec.m_o, outer)
        channels = ao_driver.channels_for_seed(spec.geometry, spec.system,
                                               outer.saa_samples, seed)
        _, _, rate_bfs = bfs(spec.geometry, spec.system, spec.m_o, channels,
                             spec.bfs)
        pairs.append((trial, seed, res.rate_star, rate_bfs))
    with (out / "bfs_pairs.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "seed", "rate_ao_bps_hz", "rate_bfs_bps_hz",
                    "gap_bps_hz"])
        for trial, seed, r_ao, r_bfs in pairs:
            w.writerow([trial, seed, format(r_ao, ".12g"), format(r_bfs, ".12g"),
                        format(r_ao - r_bfs, ".12g")])
    gaps = np.sort(np.array([r_ao - r_bfs for _, _, r_ao, r_bfs in pairs]))
    with (out / "gap_cdf.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gap_bps_hz", "cum_fraction"])
        for i, g in enumerate(gaps):
            w.writerow([format(g, ".12g"), format((i + 1) / gaps.size, ".12g")])
    _write_json(out / "bfs_compare.json", {
        "trials": spec.bfs_trials,
        "mean_gap_bps_hz": float(gaps.mean()),
        "mean_abs_gap_bps_hz": float(np.abs(gaps).mean()),
        "search_space_size": total,
    })
    print(f"bfs-compare: mean signed gap {gaps.mean():.4g} bps/Hz over "
          f"{spec.bfs_trials} paired trials; results in {out}")
    return 0


def replace_bfs(spec: config.RunSpec, max_configs: int) -> config.RunSpec:
    spec.bfs = replace(spec.bfs, max_search_size=max_configs)
    return spec


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "bfs-compare":
            return cmd_bfs_compare(args)
        if args.command == "config-reference":
            print(config.config_reference())
            return 0
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
