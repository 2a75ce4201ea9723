"""Neural error mitigation of variational quantum states."""

import json

from ._nem import (
    ConfigError,
    Error,
    NumericalError,
    checkpoint_statevector,
    ground_state,
    schwinger_terms,
    summarize,
)
from . import _nem

__all__ = [
    "ConfigError",
    "Error",
    "NumericalError",
    "checkpoint_statevector",
    "ground_energy",
    "ground_state",
    "make_config",
    "run_pipeline",
    "run_standalone_vmc",
    "schwinger_terms",
    "summarize",
]


def make_config(user=None, overrides=()):
    """Resolved configuration with defaults filled in, as a dict."""
    return json.loads(_nem._make_config(json.dumps(user or {}), list(overrides)))


def run_pipeline(config):
    """Runs VQE, tomography and VMC; returns the report.json content."""
    return json.loads(_nem._run(json.dumps(config), False))


def run_standalone_vmc(config):
    return json.loads(_nem._run(json.dumps(config), True))


def ground_energy(n_sites, mass):
    return ground_state(n_sites, mass)[0]
