"""Exception types shared across the package."""


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a formula or a geometry."""


class MeshError(ValueError):
    """Raised for degenerate or inconsistent meshes."""


class SolverError(RuntimeError):
    """Raised when a factorization or eigensolve fails."""
