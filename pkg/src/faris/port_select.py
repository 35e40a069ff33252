"""Cardinality-constrained cross-entropy search over active port sets.

An independent Bernoulli law over the M candidate ports is refit each
iteration to the elite fraction of sampled activation patterns. The refit
maximizes the elite log-likelihood subject to the expected-cardinality budget
sum(p) = M_o; the maximizer is parametrized by a scalar multiplier whose
value is pinned down by bisection on a strictly decreasing map. Samples are
repaired to exactly M_o active ports so every evaluation is well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, CorrelationModel, SystemParams
from .errors import NumericalError, ValidationError
from .reformulation import PortSelection, SelectionEvaluator, build_selection

# activation probabilities are kept inside [P_FLOOR, 1 - P_FLOOR]
P_FLOOR = 1e-6


@dataclass(frozen=True)
class CemConfig:
    n_mc: int = 0                 # 0 -> 5 * M, resolved at run time
    rho: float = 0.1
    omega: float = 0.7
    eps_c: float = 1e-3
    max_cem_iters: int = 30
    nu_bisect_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.n_mc < 0:
            raise ValidationError("n_mc must be >= 0 (0 means auto)")
        if not 0.0 < self.rho < 1.0:
            raise ValidationError("rho must lie in (0, 1)")
        if not 0.0 < self.omega < 1.0:
            raise ValidationError("omega must lie in (0, 1)")
        for name in ("eps_c", "max_cem_iters", "nu_bisect_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")

    def resolve_n_mc(self, m: int) -> int:
        n_mc = self.n_mc if self.n_mc > 0 else 5 * m
        if n_mc < math.ceil(1.0 / self.rho):
            raise ValidationError(
                f"n_mc={n_mc} too small for rho={self.rho}: elite set would be empty")
        return n_mc


@dataclass(frozen=True)
class EliteStats:
    mu: np.ndarray
    threshold_rate: float


def uniform_probabilities(m: int, m_o: int) -> np.ndarray:
    if not 1 <= m_o <= m:
        raise ValidationError(f"need 1 <= m_o <= m, got m_o={m_o}, m={m}")
    return np.full(m, m_o / m)


def sample_activation(p: np.ndarray, m_o: int, seed) -> np.ndarray:
    """Bernoulli(p) draw repaired to exactly m_o active ports.

    Excess actives are dropped at the smallest p_i, deficits filled at the
    largest inactive p_i. Exact ties are ordered by a seeded random
    permutation: a fixed lowest-index rule would skew the per-port marginals
    whenever probabilities coincide (in particular at the uniform start),
    while the seeded permutation keeps the repair deterministic per seed and
    the marginals symmetric.
    """
    rng = np.random.default_rng(seed)
    m = p.shape[0]
    zeta = (rng.random(m) < p).astype(np.int8)
    n_on = int(zeta.sum())
    if n_on > m_o:
        on = np.flatnonzero(zeta)
        tie = rng.permutation(m)
        drop = on[np.lexsort((tie[on], p[on]))[: n_on - m_o]]
        zeta[drop] = 0
    elif n_on < m_o:
        off = np.flatnonzero(zeta == 0)
        tie = rng.permutation(m)
        add = off[np.lexsort((tie[off], -p[off]))[: m_o - n_on]]
        zeta[add] = 1
    return zeta


def evaluate_sample(zeta: np.ndarray, v: np.ndarray, corr: CorrelationModel,
                    channels: ChannelSet, params: SystemParams) -> float:
    """SAA rate of an activation pattern, with v assigned to the active ports
    in ascending index order."""
    idx = np.flatnonzero(np.asarray(zeta))
    if idx.shape[0] != np.asarray(v).shape[0]:
        raise ValidationError(
            f"activation pattern has {idx.shape[0]} ones but v has length "
            f"{np.asarray(v).shape[0]}")
    return SelectionEvaluator(corr, channels, params).rate(idx, v)


def elite_select(rates: np.ndarray, rho: float) -> tuple[np.ndarray, float]:
    """Indices of the top-ceil(rho*N) rates (ties by lowest index) and the
    smallest elite rate."""
    rates = np.asarray(rates, dtype=float)
    n_mc = rates.shape[0]
    if n_mc < math.ceil(1.0 / rho):
        raise ValidationError(f"need at least ceil(1/rho) samples, got {n_mc}")
    n_e = math.ceil(rho * n_mc)
    order = np.argsort(-rates, kind="stable")
    elite = order[:n_e]
    return elite, float(rates[elite[-1]])


def elite_mean(samples: np.ndarray, elite_indices: np.ndarray) -> np.ndarray:
    """Per-port activation frequency over the elite samples."""
    elite_indices = np.asarray(elite_indices)
    if elite_indices.size == 0:
        raise ValidationError("elite set must be nonempty")
    return np.asarray(samples, dtype=float)[elite_indices].mean(axis=0)


def p_of_nu(mu, nu: float):
    """Root in (0, 1) of nu*p^2 - (nu+1)*p + mu = 0, continuous in nu.

    Two algebraically identical forms are used to avoid cancellation: the
    rationalized quotient for nu >= -1 and the explicit-root form otherwise.
    Scalar in, scalar out; arrays broadcast elementwise.
    """
    mu_arr = np.asarray(mu, dtype=float)
    disc = (nu + 1.0) ** 2 - 4.0 * nu * mu_arr
    if np.any(disc < 0.0):
        raise NumericalError(
            f"negative discriminant in the multiplier equation (nu={nu}); "
            "mu outside (0, 1)?")
    root = np.sqrt(disc)
    if nu >= -1.0:
        p = 2.0 * mu_arr / ((nu + 1.0) + root)
    else:
        p = ((nu + 1.0) - root) / (2.0 * nu)
    return p if np.ndim(mu) else float(p)


def solve_nu(mu: np.ndarray, m_o: int, tol: float) -> float:
    """Unique multiplier with sum_i p_i(nu) = m_o, by bracketing + bisection.

    The map g(nu) = sum_i p_i(nu) decreases strictly from M to 0, so a sign
    change is found by doubling the bracket outward from [-1, 1].
    """
    mu = np.asarray(mu, dtype=float)
    m = mu.shape[0]
    if not 0 < m_o < m:
        raise ValidationError(f"need 0 < m_o < M for the multiplier equation, "
                              f"got m_o={m_o}, M={m}")

    def g(nu: float) -> float:
        return float(np.sum(p_of_nu(mu, nu)))

    if abs(g(0.0) - m_o) <= tol:
        return 0.0
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if g(lo) > m_o:
            break
        lo *= 2.0
    else:
        raise NumericalError("bracket expansion failed on the low side "
                             "(NaN contamination in mu?)")
    for _ in range(200):
        if g(hi) < m_o:
            break
        hi *= 2.0
    else:
        raise NumericalError("bracket expansion failed on the high side "
                             "(NaN contamination in mu?)")
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        val = g(mid)
        if abs(val - m_o) <= tol:
            return mid
        if val > m_o:
            lo = mid
        else:
            hi = mid
    raise NumericalError(f"bisection for the multiplier did not reach "
                         f"|residual| <= {tol}")


def log_likelihood(p: np.ndarray, mu: np.ndarray) -> float:
    """Elite log-likelihood sum_i mu_i log p_i + (1 - mu_i) log(1 - p_i)."""
    p = np.asarray(p, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return float(np.sum(mu * np.log(p) + (1.0 - mu) * np.log1p(-p)))


def _clamp_with_budget(p: np.ndarray, m_o: int) -> np.ndarray:
    """Clip into [P_FLOOR, 1 - P_FLOOR] and restore sum(p) = m_o by spreading
    the deficit over entries with headroom."""
    lo, hi = P_FLOOR, 1.0 - P_FLOOR
    p = np.clip(p, lo, hi)
    for _ in range(64):
        delta = m_o - float(p.sum())
        if abs(delta) <= 1e-12:
            break
        room = (hi - p) if delta > 0 else (p - lo)
        total = float(room.sum())
        if total <= 0:
            raise NumericalError("no headroom left to restore the probability budget")
        p = np.clip(p + delta * room / total, lo, hi)
    return p


def ce_update(p_old: np.ndarray, mu: np.ndarray, omega: float, m_o: int,
              tol: float) -> np.ndarray:
    """Smoothed cross-entropy update (1-omega) * p_old + omega * p(nu)."""
    mu_c = np.clip(np.asarray(mu, dtype=float), P_FLOOR, 1.0 - P_FLOOR)
    nu = solve_nu(mu_c, m_o, tol)
    p_ce = p_of_nu(mu_c, nu)
    return _clamp_with_budget((1.0 - omega) * np.asarray(p_old) + omega * p_ce, m_o)


def run_cem(v: np.ndarray, m_o: int, cfg: CemConfig, channels: ChannelSet,
            corr: CorrelationModel, params: SystemParams, seed,
            trace_cb=None) -> PortSelection:
    """Full cross-entropy search for the best M_o-port activation at fixed v.

    Returns the better of (a) the top-M_o ports of the final probability
    vector and (b) the best activation pattern sampled anywhere in the run,
    so the output never rates below a sampled pattern.
    """
    m = corr.j.shape[0]
    if not 1 <= m_o <= m:
        raise ValidationError(f"need 1 <= m_o <= M, got m_o={m_o}, M={m}")
    if m_o == m:
        return build_selection(range(m), m)
    n_mc = cfg.resolve_n_mc(m)
    rng = np.random.default_rng(seed)
    evaluator = SelectionEvaluator(corr, channels, params)
    p = uniform_probabilities(m, m_o)
    best_rate = -np.inf
    best_zeta = None
    for it in range(cfg.max_cem_iters):
        zetas = np.stack([sample_activation(p, m_o, rng) for _ in range(n_mc)])
        rates = np.array([evaluator.rate(np.flatnonzero(z), v) for z in zetas])
        top = int(np.argmax(rates))
        if rates[top] > best_rate:
            best_rate = float(rates[top])
            best_zeta = zetas[top]
        elite_idx, threshold = elite_select(rates, cfg.rho)
        mu = elite_mean(zetas, elite_idx)
        p_new = ce_update(p, mu, cfg.omega, m_o, cfg.nu_bisect_tol)
        step = float(np.linalg.norm(p_new - p))
        if trace_cb is not None:
            mu_c = np.clip(mu, P_FLOOR, 1.0 - P_FLOOR)
            q = np.clip(p_new, 1e-300, 1.0)
            entropy = float(-np.sum(q * np.log(q) + (1 - q) * np.log1p(-q)))
            trace_cb({"iteration": it,
                      "log_likelihood_before": log_likelihood(p, mu_c),
                      "log_likelihood": log_likelihood(p_new, mu_c),
                      "best_rate_bps_hz": best_rate,
                      "elite_threshold_bps_hz": threshold,
                      "entropy": entropy})
        p = p_new
        if step < cfg.eps_c:
            break
    top_ports = np.sort(np.argsort(-p, kind="stable")[:m_o])
    rate_top = evaluator.rate(top_ports, v)
    if best_zeta is not None and best_rate > rate_top:
        return build_selection(np.flatnonzero(best_zeta), m)
    return build_selection(top_ports, m)
