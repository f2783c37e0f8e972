"""Exception hierarchy shared by every twistorkit module.

Each class maps to one failure the library can report. ``exit_code`` is what
the command line returns when the error reaches the top level.
"""


class TwistorkitError(Exception):
    """Base class for all library errors."""

    exit_code = 1

    @property
    def name(self) -> str:
        return type(self).__name__


# scalar / Laurent arithmetic
class BackendError(TwistorkitError):
    """Mixed scalar backends, or an operation unavailable on this backend."""


class EvalAtPole(TwistorkitError):
    """Evaluation of a Laurent polynomial with negative powers at zero."""


class NotUnitOnCStar(TwistorkitError):
    """The determinant of a transition matrix is not a single monomial."""


# bundles on CP1
class DegreeBoundUnstable(TwistorkitError):
    """Section-space dimension changed between degree bounds D and D+1."""


class ScanWindowExhausted(TwistorkitError):
    """The twist scan did not stabilise inside the configured window."""


class InconsistentWinding(TwistorkitError):
    """Recovered splitting degrees do not sum to the winding number."""


class NotInvertibleOnChart(TwistorkitError):
    """A gauge matrix does not have a nonzero constant determinant."""


class InvalidSection(TwistorkitError):
    """A section does not satisfy the transition identity of its bundle."""


# quaternionic structures
class NotQuaternionic(TwistorkitError):
    """A matrix A fails A * conj(A) = -I."""


class OddDimension(TwistorkitError):
    """Quaternionic data requires an even dimension."""


class DimensionMismatch(TwistorkitError):
    """Vector or matrix sizes do not agree."""


class SingularP(TwistorkitError):
    """A change-of-trivialization matrix is not invertible."""


# twistor data and recovery
class NotConstant(TwistorkitError):
    """A quantity expected to be independent of the base point is not."""


class NoAdmissiblePhase(TwistorkitError):
    """No unit phase makes the symplectic pairing Hermitian positive-definite."""


class ZeroParameter(TwistorkitError):
    """The pair (alpha, beta) = (0, 0) does not define a complex structure."""


class NotReal(TwistorkitError):
    """The recovered metric has a nonzero imaginary part."""


# deformations
class NotRegular(TwistorkitError):
    """The normal bundle has nonzero first cohomology."""


# boundary
class ConfigError(TwistorkitError):
    """Malformed configuration file or environment override."""

    exit_code = 2


class UsageError(TwistorkitError):
    """Invalid combination of command-line options."""

    exit_code = 2


class SchemaError(TwistorkitError):
    """A JSON document does not match the twistorkit/1 schema."""

    exit_code = 3


class CheckFailed(TwistorkitError):
    """A verification run produced residuals above tolerance."""

    def __init__(self, failures: list[str], message: str | None = None):
        self.failures = list(failures)
        super().__init__(message or "failed checks: " + ", ".join(self.failures))
