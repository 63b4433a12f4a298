"""Branching random walk lab.

Three engines for the two-type branching random walk with level-crossing
counts: an event-driven Monte Carlo simulator (:mod:`brwlab.sim`), the planar
pgf dynamical system with an adaptive integrator (:mod:`brwlab.dynsys`,
:mod:`brwlab.curves`) and the exact power-series engine (:mod:`brwlab.series`).
"""

from brwlab.model import (
    DerivedConstants,
    ModelParams,
    Regime,
    SpectralInfo,
    derive_constants,
    expectation_matrix_exp,
    gamma_eigenvalue,
    linearization_at_one_one,
)

__version__ = "0.1.0"

__all__ = [
    "DerivedConstants",
    "ModelParams",
    "Regime",
    "SpectralInfo",
    "derive_constants",
    "expectation_matrix_exp",
    "gamma_eigenvalue",
    "linearization_at_one_one",
    "__version__",
]
