"""Fixture CSVs matching the harness's documented schemas."""

import pytest

SELECTION = """port,row,col,active
0,0,0,1
1,0,1,0
2,0,2,0
3,1,0,0
4,1,1,1
5,1,2,0
6,2,0,0
7,2,1,0
8,2,2,1
"""

CDF = """gap_bps_hz,cum_fraction
-0.2,0.25
0.0,0.5
0.1,0.75
0.45,1
"""

CONVERGENCE = """iteration,rate_bps_hz
0,10.2
1,13.8
2,14.9
3,14.95
"""

SWEEP = """scenario,mode,sweep_var,sweep_value,trial,seed,rate_bps_hz,outer_iters,wall_time_s
power,faris,tx_power_dbm,10,0,100,12.1,3,0.5
power,faris,tx_power_dbm,10,1,101,12.4,4,0.5
power,faris,tx_power_dbm,15,0,100,14.0,3,0.5
power,faris,tx_power_dbm,15,1,101,14.3,2,0.5
power,faris,tx_power_dbm,20,0,100,15.2,3,0.5
power,faris,tx_power_dbm,20,1,101,15.6,3,0.5
"""

FIXTURES = {
    "selection_map": SELECTION,
    "cdf": CDF,
    "convergence": CONVERGENCE,
    "sweep": SWEEP,
}


@pytest.fixture
def fixture_csvs(tmp_path):
    paths = {}
    for kind, text in FIXTURES.items():
        p = tmp_path / f"{kind}.csv"
        p.write_text(text)
        paths[kind] = p
    return paths
