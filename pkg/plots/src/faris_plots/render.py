"""Static figure rendering from the harness's documented CSV schemas.

Four figure kinds are supported:
  selection_map  port,row,col,active            -> grid of active ports
  cdf            gap_bps_hz,cum_fraction        -> empirical CDF step plot
  convergence    iteration,rate_bps_hz          -> per-iteration rate trace
  sweep          scenario,mode,sweep_var,sweep_value,trial,seed,
                 rate_bps_hz,outer_iters,wall_time_s
                                                -> mean +/- std per sweep value

Rendering is read-only on its inputs and deterministic: a fixed style, a
fixed dpi and no timestamps, so identical inputs produce identical bytes.
The output file is only written after all inputs validate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("selection_map", "cdf", "convergence", "sweep")

_REQUIRED = {
    "selection_map": ("port", "row", "col", "active"),
    "cdf": ("gap_bps_hz", "cum_fraction"),
    "convergence": ("iteration", "rate_bps_hz"),
    "sweep": ("scenario", "mode", "sweep_var", "sweep_value", "trial", "seed",
              "rate_bps_hz", "outer_iters", "wall_time_s"),
}

_STYLE = {
    "figure.figsize": (5.0, 3.5),
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
}


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[Path, ...]
    output: Path
    labels: tuple[str, ...] = ()
    title: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input file is required")
        if self.labels and len(self.labels) != len(self.inputs):
            raise SchemaError("got {} labels for {} inputs".format(
                len(self.labels), len(self.inputs)))


def _read_table(path: Path, kind: str) -> dict[str, list[str]]:
    if not path.is_file():
        raise SchemaError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file (no header)") from None
        for col in _REQUIRED[kind]:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r} "
                                  f"for kind {kind!r}")
        rows = [r for r in reader if r]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    table = {col: [] for col in header}
    for r in rows:
        if len(r) != len(header):
            raise SchemaError(f"{path}: row with {len(r)} fields does not "
                              f"match the {len(header)}-column header")
        for col, val in zip(header, r):
            table[col].append(val)
    return table


def _floats(table: dict, col: str, path: Path) -> np.ndarray:
    try:
        return np.array([float(x) for x in table[col]])
    except ValueError as exc:
        raise SchemaError(f"{path}: column {col!r} is not numeric: {exc}") from exc


def _label(spec: FigureSpec, i: int) -> str:
    if spec.labels:
        return spec.labels[i]
    return spec.inputs[i].stem


def _render_selection_map(spec: FigureSpec, ax) -> None:
    table = _read_table(spec.inputs[0], "selection_map")
    rows = _floats(table, "row", spec.inputs[0]).astype(int)
    cols = _floats(table, "col", spec.inputs[0]).astype(int)
    active = _floats(table, "active", spec.inputs[0]).astype(int)
    n_rows, n_cols = rows.max() + 1, cols.max() + 1
    grid = np.zeros((n_rows, n_cols))
    grid[rows, cols] = active
    ax.imshow(grid, cmap="Blues", vmin=0, vmax=1, origin="upper")
    ax.set_xticks(np.arange(-0.5, n_cols, 1), minor=True)
    ax.set_yticks(np.arange(-0.5, n_rows, 1), minor=True)
    ax.grid(which="minor", color="gray", linewidth=0.5, alpha=0.5)
    ax.grid(which="major", visible=False)
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    total = int(active.sum())
    ax.set_title(spec.title or f"active ports ({total} of {grid.size})")


def _render_cdf(spec: FigureSpec, ax) -> None:
    for i, path in enumerate(spec.inputs):
        table = _read_table(path, "cdf")
        gaps = _floats(table, "gap_bps_hz", path)
        frac = _floats(table, "cum_fraction", path)
        ax.step(gaps, frac, where="post", label=_label(spec, i))
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("rate gap [bps/Hz]")
    ax.set_ylabel("cumulative fraction")
    ax.set_title(spec.title or "ergodic-rate gap CDF")
    if len(spec.inputs) > 1 or spec.labels:
        ax.legend()


def _render_convergence(spec: FigureSpec, ax) -> None:
    for i, path in enumerate(spec.inputs):
        table = _read_table(path, "convergence")
        it = _floats(table, "iteration", path)
        rate = _floats(table, "rate_bps_hz", path)
        ax.plot(it, rate, marker="o", markersize=3, label=_label(spec, i))
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("rate [bps/Hz]")
    ax.set_title(spec.title or "convergence")
    if len(spec.inputs) > 1 or spec.labels:
        ax.legend()


def _render_sweep(spec: FigureSpec, ax) -> None:
    sweep_var = ""
    for i, path in enumerate(spec.inputs):
        table = _read_table(path, "sweep")
        vals = _floats(table, "sweep_value", path)
        rates = _floats(table, "rate_bps_hz", path)
        sweep_var = table["sweep_var"][0]
        ok = ~np.isnan(rates)
        vals, rates = vals[ok], rates[ok]
        if vals.size == 0:
            raise SchemaError(f"{path}: no finite rate values to plot")
        uniq = np.unique(vals)
        mean = np.array([rates[vals == u].mean() for u in uniq])
        std = np.array([rates[vals == u].std(ddof=1) if (vals == u).sum() > 1
                        else 0.0 for u in uniq])
        ax.errorbar(uniq, mean, yerr=std, marker="o", markersize=3,
                    capsize=3, label=_label(spec, i))
    ax.set_xlabel(sweep_var)
    ax.set_ylabel("rate [bps/Hz]")
    ax.set_title(spec.title or "rate sweep (mean +/- std)")
    if len(spec.inputs) > 1 or spec.labels:
        ax.legend()


_RENDERERS = {
    "selection_map": _render_selection_map,
    "cdf": _render_cdf,
    "convergence": _render_convergence,
    "sweep": _render_sweep,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the output path. Inputs are validated in
    full before anything is written."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            _RENDERERS[spec.kind](spec, ax)
            spec.output.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(spec.output, metadata={"Software": "faris-plots"})
        finally:
            plt.close(fig)
    return spec.output
