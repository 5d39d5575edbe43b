import csv
import json
import math

import pytest

import wallchain as wc


def test_version():
    assert wc.__version__ == "0.1.0"


def test_single_wall_matches_closed_form():
    medium = wc.MediumParams(1.0, 1.0, 1.0)
    omega, M, K = 2.0, 0.3, 1.5
    X = omega * M - K / omega
    expected = 2 / (2 - 1j * X)
    assert abs(wc.single_wall_transmission(omega, M, K, medium) - expected) < 1e-14


def test_chain_transfer_conserves_energy():
    chain = wc.OscillatorChain([-0.3, 0.1, 0.4], [0.2, 0.1, 0.3], [1.0, 2.0, 0.5])
    for omega in (0.3, 1.0, 4.0):
        R, T = wc.chain_transfer(omega, chain)
        assert abs(abs(R) ** 2 + abs(T) ** 2 - 1) < 1e-12


def test_discretize_totals():
    profile = wc.DensityProfile.constant(1.0, 2.0, 3.0)
    chain = wc.discretize(profile, 8)
    assert len(chain) == 8
    assert math.isclose(sum(chain.M), 2.0, rel_tol=1e-12)
    assert math.isclose(sum(chain.K), 3.0, rel_tol=1e-12)


def test_bandgap_scan_cutoff():
    profile = wc.DensityProfile.constant(1.0, 1.0, 1.0)
    scan = wc.bandgap_scan(profile, [0.2, 0.5, 2.0])
    assert math.isclose(scan["omega_c"], wc.cutoff_frequency(profile), rel_tol=1e-15)
    assert scan["rows"][0][1] < scan["rows"][2][1]


def test_bad_input_raises():
    with pytest.raises(ValueError):
        wc.MediumParams(-1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        wc.canonical_config('{"experiment": "bandgap", "nope": 1}')


def test_run_config_writes_outputs(tmp_path):
    cfg = {
        "experiment": "bandgap",
        "profile": {"kind": "constant", "L": 1.0, "rho_M": 1.0, "rho_K": 1.0},
        "bandgap": {"omega_min": 0.1, "omega_max": 2.0, "count": 5},
    }
    files, warnings = wc.run_config(json.dumps(cfg), tmp_path / "out")
    assert warnings == []
    names = {p.name for p in files}
    assert {"bandgap.csv", "report.json", "metadata.json"} <= names
    with open(tmp_path / "out" / "bandgap.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["omega[rad/s]", "T2[-]", "R2[-]"]
    assert len(rows) == 6
    for _, t2, r2 in rows[1:]:
        assert abs(float(t2) + float(r2) - 1) < 1e-12
