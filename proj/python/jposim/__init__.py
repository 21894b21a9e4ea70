"""Josephson parametric oscillator readout simulator.

Thin Python layer over the compiled core. Configuration documents are the JSON
files read by the ``jpo-sim`` command. Pass one as ``cfg`` (text or nested dict)
or omit it to use the reference operating point.
"""

import json

from ._core import (
    AnalysisError,
    ConfigError,
    DomainError,
    SimulationError,
    __version__,
    default_config_json,
    derived_quantities_json,
    device_frequencies,
    duffing_frequencies,
    fit_attenuation,
    instability_threshold,
    integrate,
    photons_from_power,
    power_from_photons,
    purcell_t1,
    readout,
    steady_state,
)


def default_config():
    """Reference configuration as a nested dict."""
    return json.loads(default_config_json())


def config_text(config):
    """Serialises a nested-dict configuration for the ``cfg`` arguments."""
    return json.dumps(config)


def derived_quantities(config=None):
    return json.loads(derived_quantities_json(config))


__all__ = [
    "AnalysisError",
    "ConfigError",
    "DomainError",
    "SimulationError",
    "__version__",
    "config_text",
    "default_config",
    "derived_quantities",
    "device_frequencies",
    "duffing_frequencies",
    "fit_attenuation",
    "instability_threshold",
    "integrate",
    "photons_from_power",
    "power_from_photons",
    "purcell_t1",
    "readout",
    "steady_state",
]
