"""Inner alternating optimization of the amplification-reflection vector.

For a fixed port selection the SAA rate is maximized by alternating between
(i) a concave surrogate in the lifted matrix variable V (obtained from the
quadratic transform of each SINR ratio at fixed auxiliaries y_s) and (ii) the
closed-form update of the auxiliaries. The surrogate subproblem is solved by
projected gradient ascent with backtracking over the intersection of the PSD
cone, the radiated-power halfspace and the per-element gain box, using
Dykstra's alternating projections. Non-rank-one solutions are rounded by
Gaussian randomization followed by magnitude projection and power rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .reformulation import (PrecomputedQuantities, hermitize, radiated_power,
                            saa_rate, sinr_all_samples)

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class InnerConfig:
    eps_v: float = 1e-3                  # convergence tolerance on the rate
    n_rand: int = 50                     # Gaussian randomization candidates
    max_inner_iters: int = 50
    solver_tol: float = 1e-8             # relative objective tolerance of the subproblem
    rank_one_ratio_threshold: float = 1e-6
    max_solver_steps: int = 200
    max_dykstra_iters: int = 150

    def __post_init__(self) -> None:
        for name in ("eps_v", "n_rand", "max_inner_iters", "solver_tol",
                     "max_solver_steps", "max_dykstra_iters"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        if not 0.0 < self.rank_one_ratio_threshold < 1.0:
            raise ValidationError("rank_one_ratio_threshold must lie in (0, 1)")


@dataclass
class InnerState:
    """Result of one inner AO run."""

    v_mat: np.ndarray            # last lifted iterate
    v: np.ndarray                # best feasible reflect vector found
    y: np.ndarray                # auxiliaries at the last lifted iterate
    rate_trace: list[float]      # non-decreasing incumbent rates
    converged: bool
    stalled_iters: int = 0


def init_v(pre: PrecomputedQuantities, seed) -> np.ndarray:
    """Feasible start: max-gain random phases, rescaled into the power budget."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, pre.m_o)
    v_bar = pre.g_max * np.exp(1j * theta)
    p = radiated_power(v_bar, pre)
    if p > 0 and np.isfinite(pre.p_max):
        t = min(1.0, np.sqrt(pre.p_max / p))
    else:
        t = 1.0
    return t * v_bar


def _quad_terms(v_mat: np.ndarray, pre: PrecomputedQuantities):
    """(t_s, c_s) with t_s = tr(a_s a_s^H V) and c_s = tr(C_s V), both real >= 0."""
    t = np.einsum("si,ij,sj->s", pre.a.conj(), v_mat, pre.a).real
    c = np.einsum("sij,ji->s", pre.c, v_mat).real
    return np.maximum(t, 0.0), np.maximum(c, 0.0)


def update_y(v_mat: np.ndarray, pre: PrecomputedQuantities) -> np.ndarray:
    """Closed-form auxiliary update y_s = sqrt(t_s) / (sigma0^2 + c_s)."""
    t, c = _quad_terms(v_mat, pre)
    return np.sqrt(t) / (pre.sigma_0_sq + c)


def surrogate_values(v_mat: np.ndarray, y: np.ndarray,
                     pre: PrecomputedQuantities) -> np.ndarray:
    """Per-sample surrogate SINRs xi_s(V; y), clamped at zero."""
    t, c = _quad_terms(v_mat, pre)
    q = pre.signal_coef * (2.0 * y * np.sqrt(t) - y ** 2 * (pre.sigma_0_sq + c))
    return np.maximum(q, 0.0)


def surrogate_objective(v_mat: np.ndarray, y: np.ndarray,
                        pre: PrecomputedQuantities) -> float:
    return float(np.mean(np.log2(1.0 + surrogate_values(v_mat, y, pre))))


def _surrogate_grad(v_mat: np.ndarray, y: np.ndarray,
                    pre: PrecomputedQuantities) -> np.ndarray:
    """Hermitian ascent direction of the surrogate.

    Samples sitting in the clamped (xi_s = 0) region still contribute the
    gradient of their unclamped term, so the direction can escape flat
    regions; the caller only ever accepts steps that improve the clamped
    objective, which is what keeps the ascent contract intact.
    """
    t, c = _quad_terms(v_mat, pre)
    sqrt_t = np.sqrt(t)
    q = pre.signal_coef * (2.0 * y * sqrt_t - y ** 2 * (pre.sigma_0_sq + c))
    scale = pre.signal_coef / (pre.s * _LN2 * (1.0 + np.maximum(q, 0.0)))
    # d sqrt(t)/dV = a a^H / (2 sqrt(t)); guard the degenerate t -> 0 corner
    w1 = scale * y / np.maximum(sqrt_t, 1e-150)
    w2 = scale * y ** 2
    grad = np.einsum("s,si,sj->ij", w1, pre.a, pre.a.conj())
    grad -= np.einsum("s,sij->ij", w2, pre.c)
    return hermitize(grad)


def _proj_psd(x: np.ndarray) -> np.ndarray:
    w, vecs = np.linalg.eigh(hermitize(x))
    return hermitize((vecs * np.maximum(w, 0.0)) @ vecs.conj().T)


def project_feasible(x: np.ndarray, pre: PrecomputedQuantities,
                     max_iters: int = 150, tol: float = 1e-11) -> np.ndarray:
    """Project onto {V PSD} n {tr(FV) <= P_max} n {V_ii <= g_max^2} (Dykstra).

    A final clip-and-shrink pass makes the output exactly feasible.
    """
    g_sq = pre.g_max ** 2
    f_mat = pre.f
    f_norm_sq = float(np.real(np.vdot(f_mat, f_mat)))
    has_power = np.isfinite(pre.p_max) and f_norm_sq > 0.0

    x = hermitize(x)
    p1 = np.zeros_like(x)
    p2 = np.zeros_like(x)
    p3 = np.zeros_like(x)
    for _ in range(max_iters):
        x_prev = x
        y = _proj_psd(x + p1)
        p1 = x + p1 - y
        if has_power:
            z_in = y + p2
            power = float(np.real(np.vdot(f_mat, z_in)))
            if power > pre.p_max:
                z = z_in - ((power - pre.p_max) / f_norm_sq) * f_mat
            else:
                z = z_in
            p2 = z_in - z
        else:
            z = y
        w_in = z + p3
        w = w_in.copy()
        d = np.real(np.diag(w_in))
        np.fill_diagonal(w, np.minimum(d, g_sq))
        p3 = w_in - w
        x = w
        if np.linalg.norm(x - x_prev) <= tol * (1.0 + np.linalg.norm(x)):
            break

    # exact-feasibility cleanup: PSD clip, then uniform shrink
    x = _proj_psd(x)
    scale = 1.0
    if has_power:
        power = float(np.real(np.vdot(f_mat, x)))
        if power > pre.p_max:
            scale = min(scale, pre.p_max / power)
    dmax = float(np.real(np.diag(x)).max()) if x.shape[0] else 0.0
    if dmax > g_sq:
        scale = min(scale, g_sq / dmax)
    return scale * x


def solve_v_subproblem(pre: PrecomputedQuantities, y: np.ndarray,
                       v_mat_init: np.ndarray, cfg: InnerConfig
                       ) -> tuple[np.ndarray, bool]:
    """Maximize the fixed-y surrogate over the feasible lifted set.

    Projected gradient ascent with backtracking; never raises on slow
    convergence and never returns an iterate worse than the start.
    """
    if not np.any(y > 0.0):
        # degenerate surrogate: objective identically zero, any feasible
        # point is optimal, so the (feasible) start is returned untouched
        return np.asarray(v_mat_init, dtype=complex), True
    v_mat = project_feasible(np.asarray(v_mat_init, dtype=complex), pre,
                             cfg.max_dykstra_iters)

    f_cur = surrogate_objective(v_mat, y, pre)
    best_v, best_f = v_mat, f_cur
    ref_scale = max(float(np.real(np.trace(v_mat))), pre.g_max ** 2, 1e-30)
    alpha = None
    converged = False
    for _ in range(cfg.max_solver_steps):
        grad = _surrogate_grad(v_mat, y, pre)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= 0.0:
            converged = True
            break
        if alpha is None:
            alpha = 0.5 * ref_scale / gnorm
        else:
            alpha *= 2.0
        accepted = False
        for _bt in range(60):
            trial = project_feasible(v_mat + alpha * grad, pre,
                                     cfg.max_dykstra_iters)
            f_trial = surrogate_objective(trial, y, pre)
            if f_trial > f_cur:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            converged = True
            break
        improvement = f_trial - f_cur
        v_mat, f_cur = trial, f_trial
        if f_cur > best_f:
            best_v, best_f = v_mat, f_cur
        if improvement <= cfg.solver_tol * (1.0 + abs(f_cur)):
            converged = True
            break
    return best_v, converged


def extract_rank_one(v_mat: np.ndarray, cfg: InnerConfig
                     ) -> tuple[bool, np.ndarray]:
    """Principal-component test and extraction.

    Returns (is_rank_one, u) with u scaled so that tr(u u^H) = tr(V); the
    zero matrix counts as rank-one with a zero vector.
    """
    h = hermitize(np.asarray(v_mat, dtype=complex))
    w, vecs = np.linalg.eigh(h)
    lam1 = float(w[-1])
    trace = float(np.real(np.trace(h)))
    if lam1 <= 0.0 or trace <= 0.0:
        return True, np.zeros(h.shape[0], dtype=complex)
    lam2 = float(w[-2]) if h.shape[0] >= 2 else 0.0
    is_rank_one = max(lam2, 0.0) / lam1 <= cfg.rank_one_ratio_threshold
    u = vecs[:, -1]
    k = int(np.argmax(np.abs(u)))
    phase = u[k] / abs(u[k]) if abs(u[k]) > 0 else 1.0
    u = u / phase * np.sqrt(trace)
    return is_rank_one, u


def magnitude_project(v: np.ndarray, g_max: float) -> np.ndarray:
    """Clamp each element's magnitude to g_max, keeping its phase."""
    v = np.asarray(v, dtype=complex)
    mag = np.abs(v)
    out = v.copy()
    over = mag > g_max
    out[over] = v[over] * (g_max / mag[over])
    return out


def power_scale(v: np.ndarray, pre: PrecomputedQuantities) -> np.ndarray:
    """Uniformly shrink v if it exceeds the radiated-power budget.

    Shrinking never violates the magnitude bound, so magnitude_project
    followed by power_scale yields a fully feasible vector.
    """
    if not np.isfinite(pre.p_max):
        return np.asarray(v, dtype=complex)
    p = radiated_power(v, pre)
    if p <= pre.p_max:
        return np.asarray(v, dtype=complex)
    return np.asarray(v, dtype=complex) * np.sqrt(pre.p_max / p)


def _factor_psd(v_mat: np.ndarray) -> np.ndarray:
    """Cholesky with escalating jitter, eigen-factorization as fallback."""
    h = hermitize(np.asarray(v_mat, dtype=complex))
    n = h.shape[0]
    scale = max(float(np.real(np.trace(h))) / max(n, 1), 1e-300)
    jitter = 0.0
    for _ in range(8):
        try:
            return np.linalg.cholesky(h + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            jitter = scale * 1e-14 if jitter == 0.0 else jitter * 100.0
    w, vecs = np.linalg.eigh(h)
    return vecs * np.sqrt(np.maximum(w, 0.0))


def _reduced_rates(cands: np.ndarray, y: np.ndarray,
                   pre: PrecomputedQuantities) -> np.ndarray:
    """Surrogate rate of each candidate row at fixed y (closed form)."""
    sig = pre.a.conj() @ cands.T                      # (S, n)
    t = np.abs(sig) ** 2
    quad = np.einsum("ni,sij,nj->sn", cands.conj(), pre.c, cands).real
    q = pre.signal_coef * (2.0 * y[:, None] * np.sqrt(t)
                           - (y ** 2)[:, None] * (pre.sigma_0_sq + quad))
    return np.log2(1.0 + np.maximum(q, 0.0)).mean(axis=0)


def gaussian_randomization(v_mat0: np.ndarray, pre: PrecomputedQuantities,
                           y: np.ndarray, cfg: InnerConfig, seed) -> np.ndarray:
    """Round a (possibly non-rank-one) lifted solution to a feasible vector.

    Candidates are drawn from the factorization of V0, made feasible by
    magnitude projection + power rescaling, and scored by the closed-form
    reduced surrogate; the best feasible candidate wins (lowest index on
    ties).
    """
    rng = np.random.default_rng(seed)
    lfac = _factor_psd(v_mat0)
    m_o = lfac.shape[0]
    z = (rng.standard_normal((cfg.n_rand, lfac.shape[1]))
         + 1j * rng.standard_normal((cfg.n_rand, lfac.shape[1]))) / np.sqrt(2.0)
    cands = z @ lfac.T
    if cands.shape[1] != m_o:  # eigen-fallback keeps square shape; guard anyway
        raise NumericalError("factorization returned an unexpected shape")
    # feasibility repair, vectorized over candidates
    mag = np.abs(cands)
    over = mag > pre.g_max
    cands[over] *= pre.g_max / mag[over]
    if np.isfinite(pre.p_max):
        powers = np.einsum("ni,ij,nj->n", cands.conj(), pre.f, cands).real
        hot = powers > pre.p_max
        cands[hot] *= np.sqrt(pre.p_max / powers[hot])[:, None]
    scores = _reduced_rates(cands, y, pre)
    return cands[int(np.argmax(scores))]


def inner_ao(pre: PrecomputedQuantities, cfg: InnerConfig, seed,
             v_init: np.ndarray | None = None,
             trace_cb=None) -> InnerState:
    """Alternate subproblem solves and auxiliary updates until the incumbent
    SAA rate stops improving.

    The incumbent is elitist: an iteration whose extracted vector rates below
    the current best is recorded as stalled, which keeps the returned trace
    non-decreasing even through randomization and projection.
    """
    rng = np.random.default_rng(seed)
    if v_init is None:
        v = init_v(pre, rng)
    else:
        v = power_scale(magnitude_project(np.asarray(v_init, dtype=complex),
                                          pre.g_max), pre)
    v_mat = np.outer(v, v.conj())
    y = update_y(v_mat, pre)
    best_rate = saa_rate(v, pre)
    best_v = v
    trace = [best_rate]
    stalled = 0
    converged = False
    for it in range(cfg.max_inner_iters):
        v_mat, _ = solve_v_subproblem(pre, y, v_mat, cfg)
        is_r1, u = extract_rank_one(v_mat, cfg)
        if is_r1:
            cand = u
        else:
            cand = gaussian_randomization(v_mat, pre, y, cfg, rng)
        cand = power_scale(magnitude_project(cand, pre.g_max), pre)
        cand_rate = saa_rate(cand, pre)
        if cand_rate > best_rate:
            best_rate, best_v = cand_rate, cand
        else:
            stalled += 1
        y = update_y(v_mat, pre)
        if trace_cb is not None:
            trace_cb({"iteration": it, "rate_bps_hz": best_rate})
        if abs(best_rate - trace[-1]) < cfg.eps_v:
            converged = True
            break
        trace.append(best_rate)
    return InnerState(v_mat=v_mat, v=best_v, y=y, rate_trace=trace,
                      converged=converged, stalled_iters=stalled)
