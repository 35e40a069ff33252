"""Shared instance builders for the test suite.

Wavelengths are chosen per grid size so that the LoS feed condition
(l_f < wavelength * M) and the path-loss validity bound (distances >= 1 m)
hold simultaneously at every scale used in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

import faris


@dataclass
class Instance:
    geom: faris.SurfaceGeometry
    params: faris.SystemParams
    corr: faris.CorrelationModel
    channels: faris.ChannelSet
    sel: faris.PortSelection
    pre: faris.PrecomputedQuantities


def wavelength_for(m: int, l_f: float = 1.2) -> float:
    """Smallest round wavelength keeping l_f below wavelength * M."""
    lam = max(0.06, 1.5 * l_f / m)
    return float(np.ceil(lam * 100) / 100)


def make_instance(m_x: int, m_o: int, s: int, seed, m_y: int | None = None,
                  w_x: float = 2.0, sel_indices=None, **params_kw) -> Instance:
    m = m_x * (m_y if m_y is not None else m_x)
    params_kw.setdefault("l_f_m", 1.2)
    lam = params_kw.pop("wavelength", wavelength_for(m, params_kw["l_f_m"]))
    geom = faris.SurfaceGeometry(m_x=m_x, w_x=w_x, wavelength=lam, m_y=m_y)
    params = faris.SystemParams(**params_kw)
    ss = np.random.SeedSequence(seed)
    ch_seed, sel_seed = ss.spawn(2)
    channels = faris.build_channels(geom, params, s, ch_seed)
    corr = faris.build_correlation(geom)
    if sel_indices is None:
        sel_indices = np.random.default_rng(sel_seed).choice(
            geom.m, size=m_o, replace=False)
    sel = faris.build_selection(sel_indices, geom.m)
    pre = faris.precompute(corr, sel, channels, params)
    return Instance(geom=geom, params=params, corr=corr, channels=channels,
                    sel=sel, pre=pre)


def random_feasible_v(pre: faris.PrecomputedQuantities, rng) -> np.ndarray:
    v = (rng.standard_normal(pre.m_o) + 1j * rng.standard_normal(pre.m_o))
    v *= pre.g_max / max(np.abs(v).max(), 1e-30) * rng.uniform(0.2, 1.0)
    return faris.power_scale(faris.magnitude_project(v, pre.g_max), pre)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
