"""CLI contract: exit codes, output files, determinism, config validation."""

import csv
import json
from pathlib import Path

import pytest

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import faris.cli as cli
from faris import config as cfgmod
from faris.experiments import CSV_FIELDS

TINY = """
[geometry]
m_x = 3
wavelength_m = 0.2

[system]
l_f_m = 1.2

[run]
m_o = 2
saa_samples = 4
seed = 3

[outer]
max_outer_iters = 3

[bfs]
phase_bits = 1
gain_levels = 2
trials = 2

[[scenario]]
name = "power"
mode = "faris"
sweep_var = "tx_power_dbm"
sweep_values = [10.0, 15.0, 20.0]
trials = 2
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY)
    return path


class TestConfigReference:
    def test_reference_parses_and_roundtrips(self, capsys):
        assert cli.main(["config-reference"]) == 0
        text = capsys.readouterr().out
        doc = tomllib.loads(text)
        assert doc["system"]["tx_power_dbm"] == 15.0
        assert doc["cem"]["rho"] == 0.1

    def test_defaults_build(self):
        spec = cfgmod.default_spec()
        assert spec.geometry.m == 36
        assert spec.m_o == 9


class TestRunCommand:
    def test_run_writes_outputs(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(tiny_config),
                         "--out-dir", str(out)]) == 0
        result = json.loads((out / "result.json").read_text())
        assert len(result["selection"]) == 2
        assert result["rate_bps_hz"] > 0
        assert all(e["magnitude"] >= 0 for e in result["v"])
        trace = list(csv.reader((out / "trace.csv").open()))
        assert trace[0] == ["iteration", "rate_bps_hz"]
        sel_rows = list(csv.reader((out / "selection.csv").open()))
        assert sel_rows[0] == ["port", "row", "col", "active"]
        assert len(sel_rows) == 1 + 9
        assert sum(int(r[3]) for r in sel_rows[1:]) == 2

    def test_set_override(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(tiny_config),
                         "--set", "m_o=3", "--out-dir", str(out)]) == 0
        result = json.loads((out / "result.json").read_text())
        assert len(result["selection"]) == 3

    def test_seed_determinism_byte_identical(self, tiny_config, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.main(["run", "--config", str(tiny_config), "--seed", "7",
                             "--out-dir", str(out)]) == 0
            outs.append((out / "result.json").read_bytes()
                        + (out / "trace.csv").read_bytes()
                        + (out / "selection.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_missing_config_exits_2(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.toml")]) == 2

    def test_unknown_key_exits_2(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[system]\nbogus_key = 1\n")
        assert cli.main(["run", "--config", str(bad)]) == 2

    def test_bad_toml_exits_2(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[system\n")
        assert cli.main(["run", "--config", str(bad)]) == 2

    def test_ambiguous_set_key_exits_2(self, tiny_config, tmp_path):
        # trials exists in [bfs] and in scenarios; eps_v only in [inner]
        assert cli.main(["run", "--config", str(tiny_config),
                         "--set", "max_outer_iters=2",
                         "--out-dir", str(tmp_path / "x")]) == 0
        assert cli.main(["run", "--config", str(tiny_config),
                         "--set", "definitely_not_a_key=2"]) == 2


class TestSweepCommand:
    def test_sweep_outputs_schema(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["sweep", "--config", str(tiny_config),
                         "--scenario", "power", "--out-dir", str(out)]) == 0
        rows = list(csv.reader((out / "power.csv").open()))
        assert rows[0] == list(CSV_FIELDS)
        assert len(rows) == 1 + 3 * 2
        summary = json.loads((out / "power_summary.json").read_text())
        assert len(summary["per_value"]) == 3

    def test_unknown_scenario_lists_names(self, tiny_config, tmp_path, capsys):
        code = cli.main(["sweep", "--config", str(tiny_config),
                         "--scenario", "nope", "--out-dir", str(tmp_path)])
        assert code == 2
        assert "power" in capsys.readouterr().err

    def test_sweep_deterministic_modulo_wall_time(self, tiny_config, tmp_path):
        texts = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.main(["sweep", "--config", str(tiny_config),
                             "--scenario", "power", "--out-dir", str(out)]) == 0
            rows = (out / "power.csv").read_text().strip().split("\n")
            texts.append([",".join(r.split(",")[:-1]) for r in rows])
        assert texts[0] == texts[1]


class TestBfsCompareCommand:
    def test_small_compare_runs(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["bfs-compare", "--config", str(tiny_config),
                         "--out-dir", str(out)]) == 0
        cdf = list(csv.reader((out / "gap_cdf.csv").open()))
        assert cdf[0] == ["gap_bps_hz", "cum_fraction"]
        assert len(cdf) == 1 + 2
        assert float(cdf[-1][1]) == 1.0
        meta = json.loads((out / "bfs_compare.json").read_text())
        assert meta["trials"] == 2
        pairs = list(csv.reader((out / "bfs_pairs.csv").open()))
        assert pairs[0] == ["trial", "seed", "rate_ao_bps_hz",
                            "rate_bfs_bps_hz", "gap_bps_hz"]

    def test_identical_seeds_identical_gap_table(self, tiny_config, tmp_path):
        texts = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.main(["bfs-compare", "--config", str(tiny_config),
                             "--out-dir", str(out)]) == 0
            texts.append((out / "gap_cdf.csv").read_bytes())
        assert texts[0] == texts[1]

    def test_max_configs_guard(self, tiny_config, tmp_path, capsys):
        code = cli.main(["bfs-compare", "--config", str(tiny_config),
                         "--max-configs", "3", "--out-dir", str(tmp_path)])
        assert code == 2
        assert "3" in capsys.readouterr().err

    def test_numerical_error_exit_code(self, tiny_config, monkeypatch, tmp_path):
        import faris.cli as climod

        def boom(args):
            raise faris.NumericalError("synthetic failure")

        import faris
        monkeypatch.setattr(climod, "cmd_run", boom)
        assert climod.main(["run", "--config", str(tiny_config),
                            "--out-dir", str(tmp_path)]) == 3


class TestDeskConfig:
    def test_shipped_config_loads(self):
        spec = cfgmod.load_config(Path(__file__).parent.parent / "configs" / "desk.toml")
        assert spec.geometry.m == 36
        assert set(spec.scenarios) >= {"rate_vs_power", "rate_vs_elements",
                                       "rate_vs_aperture", "single"}
