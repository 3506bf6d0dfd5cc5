"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class SteinerError(Exception):
    """Base class for all package errors."""


class DomainError(SteinerError, ValueError):
    """Input outside the model's admissible domain (CLI exit code 2)."""


class SingularStateError(DomainError):
    """State where the vector field is singular (y <= 0, or outside the guard)."""


class SingularManifoldError(DomainError):
    """Rocking-manifold series requested at or near a singular parameter value."""


class NumericalError(SteinerError, RuntimeError):
    """A numerical procedure failed to converge or lost accuracy (exit code 3)."""


class CoincidentRootsError(NumericalError):
    """The two equilibrium branches cannot be separated (alpha0 near critical)."""
