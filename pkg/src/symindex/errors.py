"""Exception types shared across the package.

Every exception carries a stable ``code`` string so that callers (service
layer, CLI) can dispatch on it without parsing messages.
"""


class SymindexError(Exception):
    code = "ERROR"


class DimensionError(SymindexError):
    """Matrix or path has an unsupported shape (only dims 2 and 4 exist here)."""

    code = "UNSUPPORTED_DIMENSION"


class SymplecticityError(SymindexError):
    """A matrix violates M^T J M = J beyond the allowed tolerance."""

    code = "NOT_SYMPLECTIC"


class EndpointMismatchError(SymindexError):
    """Concatenation requires the first path to end where the second starts."""

    code = "ENDPOINT_MISMATCH"


class NonIdentityStartError(SymindexError):
    """Operation requires a path with psi(0) = I."""

    code = "NON_IDENTITY_START"


class MalformedPathFileError(SymindexError):
    code = "MALFORMED_PATH_FILE"


class EpsilonTooLargeError(SymindexError):
    """Perturbation pushed an endpoint or junction onto the singular set."""

    code = "EPSILON_TOO_LARGE"


class NonTransverseCrossingError(SymindexError):
    """A crossing could not be resolved transversally after re-perturbation."""

    code = "NONTRANSVERSE"


class DegenerateCrossingError(SymindexError):
    """Crossing-form formula not applicable (d(t*) ~ 0); caller must perturb."""

    code = "D_NEAR_ZERO"


class ConvergenceError(SymindexError):
    code = "NONCONVERGED"


class OrbitDomainError(SymindexError):
    """Orbit parameters outside the bounded non-collision regime."""

    code = "PARABOLIC_OR_HYPERBOLIC"


class CollisionError(SymindexError):
    code = "COLLISION"


class NearOriginError(SymindexError):
    code = "NEAR_ORIGIN"
