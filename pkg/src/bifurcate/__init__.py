"""Numerical bifurcation analysis for one-parameter families of interval maps.

The package classifies the elementary codimension-one bifurcations of a map
f(x, mu) at the origin, computes the local skeleton (fixed-point and
period-two branches with their multipliers), fits the coefficients of an
extended normal form, and constructs numerical conjugacies between the map
and that normal form, together with verification diagnostics.
"""

__version__ = "0.1.0"

from .errors import (
    BifurcateError,
    ClassificationMismatch,
    ConfigError,
    ConjugacyError,
    DomainError,
    IterationCapError,
    JetError,
    NumericError,
    ParseError,
)
from .jet import Jet1, Jet2
from .expr import MapSpec, load_config
from .classify import Kind, classify
from .normalform import fit_over_grid, leading_coefficients
from .pipeline import conjugacy_analysis

__all__ = [
    "__version__",
    "BifurcateError",
    "ClassificationMismatch",
    "ConfigError",
    "ConjugacyError",
    "DomainError",
    "IterationCapError",
    "JetError",
    "NumericError",
    "ParseError",
    "Jet1",
    "Jet2",
    "MapSpec",
    "load_config",
    "Kind",
    "classify",
    "leading_coefficients",
    "fit_over_grid",
    "conjugacy_analysis",
]
