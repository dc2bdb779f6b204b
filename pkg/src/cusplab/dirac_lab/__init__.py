"""Numerical model of the Dirac operator on a degenerating hyperbolic neck.

The pinching metric is reduced per Fourier mode (half-integer frequencies,
antiperiodic spin structure) to a pair of 1D Schroedinger operators
``-d^2/drho^2 + V^2 +- V'`` with ``V = (k + 1/2) / phi``; this subpackage
provides the exact profiles, the tridiagonal eigensolver, spectral sweeps in
the pinching parameter, localization masses, and relative resolvent traces.
"""

from cusplab.dirac_lab.geometry import (
    Chirality,
    CuspSide,
    IndicialScan,
    ModeSpec,
    NeckGeometry,
    SpinStructure,
    circle_spectrum,
    indicial_min,
    indicial_scan,
    neck_halfwidth,
    phi,
    potential,
    potential_derivative,
)
from cusplab.dirac_lab.solver import (
    Grid,
    NonConvergenceError,
    Tridiagonal,
    assemble_hamiltonian,
    convergence_order,
    eigen_lowest,
    partner_minus_hamiltonian,
    tridiagonal_from_potential,
)
from cusplab.dirac_lab.spectra import (
    SpectralCollisionError,
    SpectrumParams,
    SpectrumRow,
    SpectrumTable,
    TraceValue,
    dirac_spectrum,
    neck_mass,
    relative_resolvent_trace,
    spectral_sweep,
)

__all__ = [
    "Chirality", "CuspSide", "IndicialScan", "ModeSpec", "NeckGeometry",
    "SpinStructure", "circle_spectrum", "indicial_min", "indicial_scan",
    "neck_halfwidth", "phi", "potential", "potential_derivative",
    "Grid", "NonConvergenceError", "Tridiagonal", "assemble_hamiltonian",
    "convergence_order", "eigen_lowest", "partner_minus_hamiltonian",
    "tridiagonal_from_potential",
    "SpectralCollisionError", "SpectrumParams", "SpectrumRow", "SpectrumTable",
    "TraceValue", "dirac_spectrum", "neck_mass", "relative_resolvent_trace",
    "spectral_sweep",
]
