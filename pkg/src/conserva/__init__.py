"""Workbench for locally conservative schemes for hyperbolic conservation laws.

Any scheme written as per-element residuals whose element sums equal a
boundary flux integral can be converted to and from a locally conservative
flux form (graph flux recovery), corrected to honour extra conservation
statements (entropy inequality, total energy), and verified against exact
solutions and weak-form diagnostics.
"""

from . import active_flux, corrections, harness, mesh, models, recovery, schemes
from .records import Ledger, RunConfig, SolutionRecord

__version__ = "0.1.0"

__all__ = [
    "Ledger",
    "RunConfig",
    "SolutionRecord",
    "active_flux",
    "corrections",
    "harness",
    "mesh",
    "models",
    "recovery",
    "schemes",
]
