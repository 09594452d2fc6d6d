"""Steklov eigenvalues on planar domains.

Closed-form spectra for annuli, cylinders and segments, P1 finite elements for
the Dirichlet-to-Neumann eigenproblem, and post-processing for nodal lines,
symmetry classes and eigenvalue bounds.
"""

from .errors import DomainError, MeshError, SolverError

__version__ = "0.1.0"

__all__ = ["DomainError", "MeshError", "SolverError", "__version__"]
