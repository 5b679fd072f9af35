import math
import os
from pathlib import Path

import numpy as np
import pytest

import deshell

SCENARIOS = Path(os.environ.get("DESHELL_SCENARIOS", Path(__file__).resolve().parents[2] / "scenarios"))


def test_coefficients():
    assert deshell.coefficient(4, 10) == 210
    table = deshell.coefficient_table(10)
    assert len(table) == 66
    assert table[0] == (0, 0, 1)
    with pytest.raises(ValueError):
        deshell.coefficient(3, 2)


def test_leakage_model():
    rho33, rho22 = deshell.populations(1, 3, 0.3)
    assert rho33 + rho22 == pytest.approx(1.0, abs=1e-12)
    eff = [t["n"] for t in deshell.polynomial_terms(1, 3) if t["state"] == "33" and t["echo_effective"]]
    assert eff == [0, 4]
    assert deshell.is_phase_recovered(1, 3)
    assert not deshell.is_phase_recovered(3, 3)
    assert deshell.eta_from_depth(1.0) == pytest.approx(1 - math.exp(-1))
    curves = deshell.figure3(3, [3, 5], np.linspace(0, 1, 11))
    assert curves[5]["effective"][-1] == pytest.approx(1.0)
    assert curves[3]["effective"][-1] == pytest.approx(0.0)


def test_sequences():
    seq = deshell.locked_echo()
    assert [p.label for p in seq.pulses] == ["D", "W", "B1", "B2", "R"]
    assert seq.find("B2").duration == pytest.approx(300e-9)
    assert deshell.parse_sequence(seq.to_json()).to_json() == seq.to_json()
    assert len(deshell.load_sequence(SCENARIOS / "fig2_conventional.json")) == 3
    with pytest.raises(deshell.GeometryError):
        deshell.locked_echo(area_b2=40 * math.pi)
    with pytest.raises(deshell.ConfigError):
        deshell.parse_sequence("{")


def test_simulate_small_grid():
    seq = deshell.load_sequence(SCENARIOS / "fig2_locked.json")
    run = deshell.simulate(seq, classes=129, sample_interval=200e-9, record_detunings_hz=[30e3])
    assert run["times"].shape == run["polarization"].shape
    assert run["polarization"].dtype == np.complex128
    assert np.abs(run["polarization"]).max() <= 0.5 + 1e-9
    echo = run["echo"]
    assert echo["has_echo"]
    assert abs(echo["peak_time_s"] - 56e-6) <= 0.2e-6
    rho = run["recorded"][30e3]["rho"]
    assert rho.shape == (len(run["times"]), 3, 3)
    assert np.allclose(np.trace(rho, axis1=1, axis2=2), 1.0, atol=1e-6)
    with pytest.raises(deshell.ConfigError):
        deshell.simulate(seq, classes=65)


def test_sweep_rejects_long_b2():
    seq = deshell.locked_echo()
    with pytest.raises(deshell.GeometryError):
        deshell.sweep_b2(seq, [3, 40], classes=129)
