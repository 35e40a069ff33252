"""Brute-force baseline over port subsets and discretized reflect vectors.

Ground truth for tiny instances: every M_o-subset of ports is paired with
every per-element combination of b-bit phases and uniformly gridded gains;
power-infeasible combinations are skipped so the search covers exactly the
feasible discrete set.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, SurfaceGeometry, SystemParams, build_correlation
from .errors import ValidationError
from .reformulation import (PortSelection, SelectionEvaluator, build_selection,
                            precompute, saa_rate)


@dataclass(frozen=True)
class BfsConfig:
    phase_bits: int = 2
    gain_levels: int = 8
    max_search_size: int = 2_000_000

    def __post_init__(self) -> None:
        if self.phase_bits < 1:
            raise ValidationError("phase_bits must be >= 1")
        if self.gain_levels < 2:
            raise ValidationError("gain_levels must be >= 2")
        if self.max_search_size < 1:
            raise ValidationError("max_search_size must be >= 1")


def search_space_size(m: int, m_o: int, cfg: BfsConfig) -> int:
    per_element = (2 ** cfg.phase_bits) * cfg.gain_levels
    return math.comb(m, m_o) * per_element ** m_o


def bfs(geom: SurfaceGeometry, params: SystemParams, m_o: int,
        channels: ChannelSet, cfg: BfsConfig
        ) -> tuple[PortSelection, np.ndarray, float]:
    """Exhaustive search; returns the feasible maximizer of the SAA rate.

    Deterministic: subsets and per-element configurations are enumerated in
    lexicographic order and only strict improvements replace the incumbent.
    """
    m = geom.m
    if not 1 <= m_o <= m:
        raise ValidationError(f"need 1 <= m_o <= M, got m_o={m_o}, M={m}")
    total = search_space_size(m, m_o, cfg)
    if total > cfg.max_search_size:
        raise ValidationError(
            f"search space has {total} configurations, exceeding the cap "
            f"{cfg.max_search_size}")

    corr = build_correlation(geom)
    evaluator = SelectionEvaluator(corr, channels, params)
    phases = 2.0 * np.pi * np.arange(2 ** cfg.phase_bits) / (2 ** cfg.phase_bits)
    gains = np.linspace(0.0, params.g_max, cfg.gain_levels)
    alphabet = np.array([g * np.exp(1j * ph)
                         for g, ph in itertools.product(gains, phases)])
    grids = np.meshgrid(*([alphabet] * m_o), indexing="ij")
    cands = np.stack([g.ravel() for g in grids], axis=1)  # lexicographic rows

    best_rate = -np.inf
    best_sel: tuple[int, ...] | None = None
    best_v: np.ndarray | None = None
    for subset in itertools.combinations(range(m), m_o):
        pre = evaluator.precompute_sel(subset)
        powers = np.einsum("ni,ij,nj->n", cands.conj(), pre.f, cands).real
        feasible = powers <= pre.p_max
        if not feasible.any():
            continue
        vs = cands[feasible]
        sig = pre.a.conj() @ vs.T                               # (S, n)
        num = pre.signal_coef * np.abs(sig) ** 2
        quad = np.einsum("ni,sij,nj->sn", vs.conj(), pre.c, vs).real
        rates = np.log2(1.0 + num / (pre.sigma_0_sq + quad)).mean(axis=0)
        k = int(np.argmax(rates))
        if rates[k] > best_rate:
            best_rate = float(rates[k])
            best_sel = subset
            best_v = vs[k]

    assert best_sel is not None and best_v is not None  # gain 0 is always feasible
    sel = build_selection(best_sel, m)
    # report through the standard evaluation path
    rate = saa_rate(best_v, precompute(corr, sel, channels, params))
    return sel, best_v, rate
