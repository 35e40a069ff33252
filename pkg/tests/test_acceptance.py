"""Acceptance gate: one test per criterion, each printing a PASS line with
the measured quantity at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

import faris

from conftest import make_instance, random_feasible_v, wavelength_for


def _report(criterion: str, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion}: PASS  [{detail}]")


@pytest.fixture(scope="module")
def equivalence_instances():
    """200 random instances (M <= 16, M_o <= 8, S <= 4) with random feasible
    reflect vectors, shared by criteria 1 and 2."""
    rng = np.random.default_rng(20250809)
    out = []
    for k in range(200):
        m_x = int(rng.integers(2, 5))            # M in {4, 9, 16}
        m = m_x * m_x
        m_o = int(rng.integers(1, min(m, 8) + 1))
        s = int(rng.integers(1, 5))
        inst = make_instance(m_x, m_o, s, seed=9000 + k)
        v = random_feasible_v(inst.pre, rng)
        out.append((inst, v))
    return out


class TestCriterion1TheoremEquivalence:
    def test_direct_vs_lifted_sinr_and_power(self, equivalence_instances):
        t0 = time.perf_counter()
        worst_sinr, worst_power = 0.0, 0.0
        for inst, v in equivalence_instances:
            v_mat = np.outer(v, v.conj())
            for s in range(inst.pre.s):
                d = faris.sinr_direct(v, inst.sel, inst.corr, inst.channels,
                                      inst.params, s)
                l = faris.sinr_lifted(v_mat, inst.pre, s)
                rel = abs(d - l) / (1.0 + abs(d))
                worst_sinr = max(worst_sinr, rel)
                assert rel <= 1e-9
            # power: physical operator form vs v^H F v vs tr(F V)
            idx = np.asarray(inst.sel.indices)
            a_act = inst.corr.j_sqrt[:, idx] @ (v[:, None]
                                                * inst.corr.j_sqrt[idx, :])
            l_f = faris.path_loss(inst.params.l_f_m, inst.params.pl_exp_f,
                                  inst.geom.wavelength)
            p_direct = (inst.params.tx_power_w * l_f
                        * np.linalg.norm(a_act @ inst.channels.h_f_los) ** 2
                        + inst.params.sigma_r_sq
                        * np.linalg.norm(a_act, "fro") ** 2)
            for p_alt in (faris.radiated_power(v, inst.pre),
                          faris.radiated_power(v_mat, inst.pre)):
                rel = abs(p_direct - p_alt) / p_direct
                worst_power = max(worst_power, rel)
                assert rel <= 1e-9
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0
        _report("1 (lifted-form equivalence)",
                f"200 instances, worst SINR rel {worst_sinr:.2e}, "
                f"worst power rel {worst_power:.2e}, {elapsed:.1f}s")


class TestCriterion2PsdStructure:
    def test_constructed_matrices_are_psd(self, equivalence_instances):
        worst = 0.0
        for inst, _ in equivalence_instances:
            for mat in (inst.pre.q1, inst.pre.q2, inst.pre.f, *inst.pre.c):
                lam = np.linalg.eigvalsh(mat)
                lam_max = max(float(lam.max()), 1e-300)
                worst = max(worst, -float(lam.min()) / lam_max)
                assert lam.min() >= -1e-9 * lam_max
        _report("2 (PSD structure)",
                f"all C_s/Q1/Q2/F on 200 instances, worst -min_eig/max_eig "
                f"{worst:.2e}")


class TestCriterion3QuadraticTransformTightness:
    def test_auxiliary_update_is_tight(self):
        rng = np.random.default_rng(31)
        checked = 0
        worst = 0.0
        for k in range(10):
            inst = make_instance(int(rng.integers(2, 5)),
                                 int(rng.integers(2, 5)),
                                 int(rng.integers(2, 5)), seed=9500 + k)
            v = random_feasible_v(inst.pre, rng)
            v_mat = np.outer(v, v.conj())
            cfg = faris.InnerConfig()
            y = faris.update_y(v_mat, inst.pre)
            for _ in range(5):
                v_mat, _ = faris.solve_v_subproblem(inst.pre, y, v_mat, cfg)
                y = faris.update_y(v_mat, inst.pre)
                xis = faris.surrogate_values(v_mat, y, inst.pre)
                for s in range(inst.pre.s):
                    gamma = faris.sinr_lifted(v_mat, inst.pre, s)
                    rel = abs(xis[s] - gamma) / (1.0 + gamma)
                    worst = max(worst, rel)
                    assert rel <= 1e-9
                checked += 1
        _report("3 (quadratic-transform tightness)",
                f"{checked} inner iterations, worst |xi-gamma|/(1+gamma) "
                f"{worst:.2e}")


class TestCriterion4InnerMonotonicity:
    def test_twenty_seeds(self):
        inst = make_instance(4, 4, 32, seed=77)  # M = 16
        worst_drop = 0.0
        for seed in range(20):
            st = faris.inner_ao(inst.pre, faris.InnerConfig(), seed)
            for r0, r1 in zip(st.rate_trace, st.rate_trace[1:]):
                worst_drop = max(worst_drop, r0 - r1)
                assert r1 >= r0 - 1e-9
        _report("4 (inner monotonicity)",
                f"M=16, M_o=4, S=32, 20 seeds, worst decrease "
                f"{worst_drop:.2e} bps/Hz")


class TestCriterion5CemAlgebra:
    def test_algebra_suite(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(55)
        # (a) KKT residual and (b) budget residual over random mu
        worst_kkt, worst_budget = 0.0, 0.0
        for _ in range(100):
            m = int(rng.integers(4, 30))
            m_o = int(rng.integers(1, m))
            mu = np.clip(rng.random(m), 1e-6, 1 - 1e-6)
            nu = faris.solve_nu(mu, m_o, 1e-10)
            p = faris.p_of_nu(mu, nu)
            kkt = np.max(np.abs(nu * p * p - (nu + 1) * p + mu))
            worst_kkt = max(worst_kkt, float(kkt))
            assert kkt <= 1e-10
            budget = abs(float(np.sum(p)) - m_o)
            worst_budget = max(worst_budget, budget)
            assert budget <= 1e-8
        # (c) strict monotonicity of g on a 100-point grid
        mu = np.clip(rng.random(12), 1e-6, 1 - 1e-6)
        grid = np.linspace(-60.0, 60.0, 100)
        g_vals = [float(np.sum(faris.p_of_nu(mu, nu))) for nu in grid]
        assert all(a > b for a, b in zip(g_vals, g_vals[1:]))
        # (d) likelihood monotone across 20 full CEM runs
        inst = make_instance(3, 3, 4, seed=555)
        v = random_feasible_v(inst.pre, rng)
        iters = 0
        for seed in range(20):
            rows = []
            faris.run_cem(v, 3, faris.CemConfig(), inst.channels, inst.corr,
                          inst.params, seed, trace_cb=rows.append)
            for row in rows:
                assert (row["log_likelihood"]
                        >= row["log_likelihood_before"] - 1e-9)
            iters += len(rows)
        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0
        _report("5 (CEM algebra)",
                f"KKT {worst_kkt:.1e}, budget {worst_budget:.1e}, g strictly "
                f"decreasing, likelihood monotone over {iters} iterations, "
                f"{elapsed:.1f}s")


class TestCriterion6SmallInstanceCemOptimality:
    def test_recovers_exhaustive_best(self):
        inst = make_instance(6, 2, 4, seed=66, m_y=1)  # M = 6 strip
        v = random_feasible_v(inst.pre, np.random.default_rng(660))
        evaluator = faris.SelectionEvaluator(inst.corr, inst.channels,
                                             inst.params)
        best_pair = max(itertools.combinations(range(6), 2),
                        key=lambda pair: evaluator.rate(pair, v))
        cfg = faris.CemConfig(n_mc=60, max_cem_iters=30)
        hits = sum(
            faris.run_cem(v, 2, cfg, inst.channels, inst.corr, inst.params,
                          seed).indices == tuple(sorted(best_pair))
            for seed in range(50))
        assert hits >= 45
        _report("6 (small-instance CEM optimality)",
                f"M=6, M_o=2: exhaustive-best pair found in {hits}/50 seeds")


class TestCriterion7OuterConvergence:
    def test_monotone_and_converging(self):
        geom = faris.SurfaceGeometry(m_x=6, w_x=2.0, wavelength=0.06)
        params = faris.SystemParams(l_f_m=1.5)
        converged = 0
        worst_drop = 0.0
        iters = []
        for seed in range(20):
            cfg = faris.OuterConfig(seed=seed, saa_samples=32,
                                    max_outer_iters=30)
            res = faris.run(geom, params, 9, cfg)
            for r0, r1 in zip(res.outer_trace, res.outer_trace[1:]):
                worst_drop = max(worst_drop, r0 - r1)
                assert r1 >= r0 - 1e-9
            converged += res.converged
            iters.append(res.iteration_count)
        assert converged >= 18  # 90 % of 20 seeds
        _report("7 (outer monotonicity + convergence)",
                f"M=36, M_o=9, S=32: {converged}/20 seeds converged within 30 "
                f"iterations (median {int(np.median(iters))}), worst decrease "
                f"{worst_drop:.2e}")


class TestCriterion8BfsGap:
    def test_scaled_gap(self):
        t0 = time.perf_counter()
        lam = wavelength_for(8)
        geom = faris.SurfaceGeometry(m_x=8, w_x=2.0, wavelength=lam, m_y=1)
        params = faris.SystemParams(l_f_m=1.2)
        bfs_cfg = faris.BfsConfig(phase_bits=2, gain_levels=4,
                                  max_search_size=10 ** 6)
        gaps = []
        for trial in range(30):
            seed = 8000 + trial
            cfg = faris.OuterConfig(seed=seed, saa_samples=16,
                                    max_outer_iters=15)
            res = faris.run(geom, params, 2, cfg)
            channels = faris.channels_for_seed(geom, params, 16, seed)
            _, _, rate_bfs = faris.bfs(geom, params, 2, channels, bfs_cfg)
            gaps.append(res.rate_star - rate_bfs)
        mean_abs = float(np.mean(np.abs(gaps)))
        mean_signed = float(np.mean(gaps))
        elapsed = time.perf_counter() - t0
        assert mean_abs <= 1.0
        assert elapsed < 600.0
        _report("8 (scaled BFS gap)",
                f"M=8, M_o=2, 30 paired trials: mean |gap| {mean_abs:.3f} "
                f"bps/Hz (signed {mean_signed:+.3f}), {elapsed:.0f}s")


class TestCriterion9BaselineOrdering:
    def test_paired_ordering_with_bootstrap(self):
        geom = faris.SurfaceGeometry(m_x=6, w_x=2.0, wavelength=0.06)
        params = faris.SystemParams(l_f_m=1.5, tx_power_dbm=15.0)
        block = faris.centered_selection(geom, 9)
        passive = replace(params, g_max_db=0.0, p_max_dbm=math.inf)
        r_faris, r_aris, r_fris = [], [], []
        for trial in range(50):
            cfg = faris.OuterConfig(seed=trial, saa_samples=32,
                                    max_outer_iters=15)
            r_faris.append(faris.run(geom, params, 9, cfg).rate_star)
            r_aris.append(faris.run(geom, params, 9, cfg,
                                    fixed_selection=block).rate_star)
            r_fris.append(faris.run(geom, passive, 9, cfg,
                                    unit_modulus=True).rate_star)
        r_faris, r_aris, r_fris = map(np.array, (r_faris, r_aris, r_fris))
        assert r_faris.mean() >= r_aris.mean()
        assert r_faris.mean() >= r_fris.mean()
        diffs = r_faris - r_fris
        rng = np.random.default_rng(99)
        boot = rng.choice(diffs, size=(10_000, diffs.size), replace=True)
        lo = float(np.percentile(boot.mean(axis=1), 5.0))
        assert lo > 0.0
        _report("9 (baseline ordering)",
                f"50 paired trials: faris {r_faris.mean():.2f} >= aris "
                f"{r_aris.mean():.2f} and >= fris {r_fris.mean():.2f} bps/Hz; "
                f"faris-fris margin {diffs.mean():.2f}, bootstrap 5th pct "
                f"{lo:.2f} > 0")


class TestCriterion10Determinism:
    def test_cli_outputs_byte_identical(self, tmp_path):
        import faris.cli as cli

        cfg_path = tmp_path / "c.toml"
        cfg_path.write_text("""
[geometry]
m_x = 3
wavelength_m = 0.2
[system]
l_f_m = 1.2
[run]
m_o = 2
saa_samples = 4
seed = 11
[outer]
max_outer_iters = 3
[bfs]
phase_bits = 1
gain_levels = 2
trials = 2
[[scenario]]
name = "s"
mode = "faris"
sweep_var = "tx_power_dbm"
sweep_values = [10.0, 15.0]
trials = 2
""")
        captures = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.main(["run", "--config", str(cfg_path),
                             "--out-dir", str(out / "run")]) == 0
            assert cli.main(["sweep", "--config", str(cfg_path),
                             "--scenario", "s", "--out-dir", str(out / "sw")]) == 0
            assert cli.main(["bfs-compare", "--config", str(cfg_path),
                             "--out-dir", str(out / "bf")]) == 0
            sweep_rows = (out / "sw" / "s.csv").read_text().strip().split("\n")
            sweep_stripped = "\n".join(",".join(r.split(",")[:-1])
                                       for r in sweep_rows)
            captures.append((
                (out / "run" / "result.json").read_bytes(),
                (out / "run" / "trace.csv").read_bytes(),
                (out / "run" / "selection.csv").read_bytes(),
                sweep_stripped,
                (out / "bf" / "gap_cdf.csv").read_bytes(),
                (out / "bf" / "bfs_pairs.csv").read_bytes(),
            ))
        assert captures[0] == captures[1]
        _report("10 (determinism)",
                "run/sweep/bfs-compare byte-identical across repeats "
                "(wall-time column excluded)")
