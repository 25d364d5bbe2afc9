"""Robust one-port compensator design by H-infinity model matching.

The subpackages build on each other: :mod:`poly_rational` (rational
functions), :mod:`realization` (state space, gramians, Hankel data),
:mod:`coprime` (fractions over stable functions), :mod:`hinf` (model
matching), :mod:`synthesis` (the circuit design) and :mod:`cli_io`
(configs and artifacts).
"""

from .coprime import CoprimeFraction, coprime_factorization
from .errors import Infeasible, InputError, NumericalError, PortSynthError
from .hinf import model_match
from .poly_rational import (
    FrequencyGrid,
    Polynomial,
    RationalFunction,
    RationalVector,
    cancel_near_pairs,
    default_grid,
    linf_norm,
)
from .synthesis import CircuitParams, SynthesisResult, circuit_impedance, synthesize

__version__ = "0.1.0"

__all__ = [
    "CircuitParams",
    "CoprimeFraction",
    "FrequencyGrid",
    "Infeasible",
    "InputError",
    "NumericalError",
    "Polynomial",
    "PortSynthError",
    "RationalFunction",
    "RationalVector",
    "SynthesisResult",
    "cancel_near_pairs",
    "circuit_impedance",
    "coprime_factorization",
    "default_grid",
    "linf_norm",
    "model_match",
    "synthesize",
]
