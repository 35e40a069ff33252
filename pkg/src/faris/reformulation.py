"""Per-selection quantities and rate evaluation in direct and lifted form.

For a fixed set of active ports the instantaneous SINR, the radiated power
and the sample-average (SAA) rate admit two equivalent evaluations: a direct
one through the full M x M effective surface operator, and a lifted one
through small M_o-dimensional quantities (b, u_s, K, a_s, C_s, Q1, Q2, F).
Both paths are kept so that each can check the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, CorrelationModel, SystemParams, path_loss
from .errors import ValidationError


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return the exactly Hermitian part (A + A^H) / 2."""
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class PortSelection:
    """Strictly increasing indices of the M_o active ports."""

    indices: tuple[int, ...]
    m: int

    @property
    def m_o(self) -> int:
        return len(self.indices)


def build_selection(indices, m: int) -> PortSelection:
    """Validate and canonicalize (sort) a port index set."""
    idx = [int(i) for i in indices]
    if len(idx) == 0:
        raise ValidationError("selection must contain at least one port")
    if len(set(idx)) != len(idx):
        raise ValidationError(f"selection indices must be distinct, got {idx}")
    if len(idx) > m:
        raise ValidationError(f"cannot select {len(idx)} ports out of {m}")
    for i in idx:
        if not 0 <= i < m:
            raise ValidationError(f"port index {i} out of range [0, {m})")
    return PortSelection(indices=tuple(sorted(idx)), m=m)


@dataclass(frozen=True)
class PrecomputedQuantities:
    """Selection-restricted matrices and scalars used by the optimizer.

    Shapes: b (M_o,), k_sel (M_o, M_o), u and a (S, M_o), c (S, M_o, M_o),
    q1 / q2 / f (M_o, M_o). `signal_coef` is P * L_f * L_u.
    """

    b: np.ndarray
    k_sel: np.ndarray
    u: np.ndarray
    a: np.ndarray
    c: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    f: np.ndarray
    signal_coef: float
    sigma_0_sq: float
    p_max: float
    g_max: float

    @property
    def m_o(self) -> int:
        return self.b.shape[0]

    @property
    def s(self) -> int:
        return self.u.shape[0]


def _link_gains(params: SystemParams, wavelength: float) -> tuple[float, float]:
    l_f = path_loss(params.l_f_m, params.pl_exp_f, wavelength)
    l_u = path_loss(params.l_u_m, params.pl_exp_u, wavelength)
    return l_f, l_u


def _assemble(idx: np.ndarray, b_full: np.ndarray, u_full: np.ndarray,
              j: np.ndarray, params: SystemParams,
              l_f: float, l_u: float) -> PrecomputedQuantities:
    b = b_full[idx]
    u = u_full[:, idx]
    k_sel = j[np.ix_(idx, idx)]
    a = u * b.conj()[None, :]
    uu = u[:, :, None] * u[:, None, :].conj()
    c = (l_u * params.sigma_r_sq) * (k_sel[None, :, :] * uu)
    c = 0.5 * (c + c.conj().transpose(0, 2, 1))
    q1 = hermitize(k_sel * (b.conj()[:, None] * b[None, :]))
    q2 = k_sel * k_sel
    f = hermitize(params.tx_power_w * l_f * q1 + params.sigma_r_sq * q2)
    return PrecomputedQuantities(
        b=b, k_sel=k_sel, u=u, a=a, c=c, q1=q1, q2=q2, f=f,
        signal_coef=params.tx_power_w * l_f * l_u,
        sigma_0_sq=params.sigma_0_sq,
        p_max=params.p_max_w,
        g_max=params.g_max,
    )


def precompute(corr: CorrelationModel, sel: PortSelection,
               channels: ChannelSet, params: SystemParams) -> PrecomputedQuantities:
    """Build the selection-restricted quantities for one port set."""
    m = corr.j.shape[0]
    if sel.m != m or channels.h_f_los.shape[0] != m:
        raise ValidationError(
            f"selection/channel dimension mismatch: selection expects M={sel.m}, "
            f"correlation has M={m}, channels have M={channels.h_f_los.shape[0]}"
        )
    b_full = corr.j_sqrt @ channels.h_f_los
    u_full = channels.samples @ corr.j_sqrt
    l_f, l_u = _link_gains(params, channels.wavelength)
    return _assemble(np.asarray(sel.indices), b_full, u_full, corr.j,
                     params, l_f, l_u)


class SelectionEvaluator:
    """Caches the selection-independent transforms so that many port sets can
    be scored cheaply (the cross-entropy loop and the brute-force oracle both
    evaluate thousands of selections against one frozen channel set)."""

    def __init__(self, corr: CorrelationModel, channels: ChannelSet,
                 params: SystemParams):
        self.j = corr.j
        self.params = params
        self.b_full = corr.j_sqrt @ channels.h_f_los
        self.u_full = channels.samples @ corr.j_sqrt
        self.l_f, self.l_u = _link_gains(params, channels.wavelength)

    def precompute_sel(self, indices) -> PrecomputedQuantities:
        idx = np.asarray(sorted(int(i) for i in indices))
        return _assemble(idx, self.b_full, self.u_full, self.j,
                         self.params, self.l_f, self.l_u)

    def rate(self, indices, v: np.ndarray) -> float:
        return saa_rate(v, self.precompute_sel(indices))


def _effective_operator(v: np.ndarray, sel: PortSelection,
                        corr: CorrelationModel) -> np.ndarray:
    idx = np.asarray(sel.indices)
    return corr.j_sqrt[:, idx] @ (v[:, None] * corr.j_sqrt[idx, :])


def sinr_direct(v: np.ndarray, sel: PortSelection, corr: CorrelationModel,
                channels: ChannelSet, params: SystemParams,
                sample_index: int) -> float:
    """SINR of one fading sample through the full M x M surface operator."""
    if not 0 <= sample_index < channels.s:
        raise ValidationError(
            f"sample_index {sample_index} out of range [0, {channels.s})")
    l_f, l_u = _link_gains(params, channels.wavelength)
    a_act = _effective_operator(v, sel, corr)
    h_s = channels.samples[sample_index]
    sig = h_s.conj() @ a_act @ channels.h_f_los
    num = params.tx_power_w * l_f * l_u * float(np.abs(sig) ** 2)
    amp_noise = l_u * params.sigma_r_sq * float(
        np.linalg.norm(a_act.conj().T @ h_s) ** 2)
    return num / (params.sigma_0_sq + amp_noise)


def sinr_lifted(v_mat: np.ndarray, pre: PrecomputedQuantities,
                sample_index: int) -> float:
    """SINR of one fading sample from the lifted matrix variable."""
    a_s = pre.a[sample_index]
    num = pre.signal_coef * float(np.real(a_s.conj() @ v_mat @ a_s))
    den = pre.sigma_0_sq + float(np.real(np.trace(pre.c[sample_index] @ v_mat)))
    return num / den


def radiated_power(v_or_v_mat: np.ndarray, pre: PrecomputedQuantities) -> float:
    """Instantaneous power radiated by the surface, v^H F v or tr(F V)."""
    x = np.asarray(v_or_v_mat)
    if x.ndim == 1:
        return float(np.real(x.conj() @ pre.f @ x))
    if x.ndim == 2:
        return float(np.real(np.trace(pre.f @ x)))
    raise ValidationError(f"expected a vector or square matrix, got ndim={x.ndim}")


def sinr_all_samples(v: np.ndarray, pre: PrecomputedQuantities) -> np.ndarray:
    """Vector of per-sample SINRs at a reflect vector v."""
    sig = pre.a.conj() @ v
    num = pre.signal_coef * np.abs(sig) ** 2
    quad = np.einsum("i,sij,j->s", v.conj(), pre.c, v).real
    return num / (pre.sigma_0_sq + quad)


def saa_rate(v: np.ndarray, pre: PrecomputedQuantities) -> float:
    """Sample-average rate (1/S) sum_s log2(1 + gamma_s) in bits/s/Hz."""
    return float(np.mean(np.log2(1.0 + sinr_all_samples(v, pre))))
