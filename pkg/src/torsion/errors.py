"""Exception and warning types shared across the package."""


class TorsionError(ValueError):
    """Base class for all input and invariant errors raised by this package."""


class ShapeMismatch(TorsionError):
    pass


class NotAComplex(TorsionError):
    pass


class NotAcyclic(TorsionError):
    pass


class EvenLength(TorsionError):
    pass


class InvalidChirality(TorsionError):
    pass


class SignatureNotInvertible(TorsionError):
    pass


class SingularBlock(TorsionError):
    pass


class NotAPerturbation(TorsionError):
    pass


class NonCommuting(TorsionError):
    pass


class ConstraintViolation(TorsionError):
    pass


class DegenerateEigenvalue(TorsionError):
    pass


class NotFlat(TorsionError):
    pass


class BadEulerChain(TorsionError):
    pass


class NotACycle(TorsionError):
    pass


class EndpointMismatch(TorsionError):
    pass


class NotHyperbolic(TorsionError):
    pass


class CatalogIncomplete(TorsionError):
    pass


class CutOnResonance(TorsionError):
    pass


class SchemaError(TorsionError):
    """Malformed or unsupported JSON input."""


class ConvergenceWarning(UserWarning):
    """Evaluation point lies outside the certified convergence region."""
