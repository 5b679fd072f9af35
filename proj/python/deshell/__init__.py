"""Three-level photon-echo deshelling simulator and leakage model."""

from ._core import (
    ConfigError,
    Error,
    GeometryError,
    IntegrationDiverged,
    InvalidSequence,
    Pulse,
    PulseSequence,
    __version__,
    coefficient,
    coefficient_table,
    echo_effective_amplitude,
    eta_from_depth,
    figure3,
    is_phase_recovered,
    load_sequence,
    locked_echo,
    parse_sequence,
    polynomial_terms,
    populations,
    simulate,
    sweep_b2,
    three_pulse_echo,
)

__all__ = [
    "ConfigError",
    "Error",
    "GeometryError",
    "IntegrationDiverged",
    "InvalidSequence",
    "Pulse",
    "PulseSequence",
    "__version__",
    "coefficient",
    "coefficient_table",
    "echo_effective_amplitude",
    "eta_from_depth",
    "figure3",
    "is_phase_recovered",
    "load_sequence",
    "locked_echo",
    "parse_sequence",
    "polynomial_terms",
    "populations",
    "simulate",
    "sweep_b2",
    "three_pulse_echo",
]
