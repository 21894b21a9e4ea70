import json
import math

import numpy as np
import pytest

import jposim


def test_default_config_round_trips():
    cfg = jposim.default_config()
    assert cfg["operating_point"]["delta_q0_over_gamma"] == -5.34
    assert jposim.default_config() == json.loads(jposim.config_text(cfg))


def test_device_frequencies_at_operating_bias():
    f = jposim.device_frequencies(0.185 * math.pi)
    assert f["qubit_hz"] == pytest.approx(4.885e9, rel=5e-3)
    assert f["two_chi_hz"] < 0.0
    assert f["alpha_hz"] == pytest.approx(27.05e3, rel=1e-2)


def test_threshold_and_steady_state():
    lower, upper = jposim.instability_threshold(-5.34, 7.5e-3)
    assert 0.0 < lower < upper
    ss = jposim.steady_state(0.0, 2.0, -1.0, 1.0)
    assert ss["regime"] == "bistable"
    assert ss["stable_photons"] == pytest.approx(math.sqrt(3.0), rel=1e-9)


def test_integrate_returns_arrays():
    t, a = jposim.integrate(1, seed=3, t_end=100e-9)
    assert t.shape == a.shape
    assert a.dtype == np.complex128
    assert np.all(np.isfinite(np.abs(a)))


def test_small_readout_run():
    out = jposim.readout(300, seed=5)
    assert out["voltages"].shape == (600, 2)
    assert 0.5 < out["discrimination"] <= 1.0
    total = (
        out["discrimination"]
        + out["relaxation_loss"]
        + out["preparation_loss"]
        + out["thermal_loss"]
        + out["switching_loss"]
        + out["overlap_loss"]
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_attenuation_fit_recovers_synthetic_value():
    powers = [-30.0, -20.0, -10.0, 0.0]
    bias = 0.185 * math.pi
    freqs = jposim.duffing_frequencies(bias, 127.5, powers)
    fit = jposim.fit_attenuation(powers, freqs, bias)
    assert fit["attenuation_db"] == pytest.approx(127.5, abs=1e-6)


def test_config_errors_raise():
    with pytest.raises(jposim.ConfigError):
        jposim.derived_quantities({})
