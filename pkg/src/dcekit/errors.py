"""Exception hierarchy shared by all dcekit modules."""


class DcekitError(Exception):
    """Base class for every error raised by dcekit."""


class DomainError(DcekitError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalDomainError(DomainError):
    """A derived quantity left its admissible range during evaluation.

    The offending value is kept on ``value`` for diagnostics.
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class SingularInductanceError(DomainError):
    """Flux reached a point where the Josephson inductance diverges."""


class FitError(DcekitError):
    """A fit could not be performed on the supplied data."""


class OnsetNotFoundError(FitError):
    """No column of a flux-pump map crossed the onset threshold."""


class SamplingError(DcekitError):
    """A covariance matrix could not be factorized for sampling."""


class ConfigError(DcekitError, ValueError):
    """A configuration document or file header failed validation."""


class SchemaVersionError(ConfigError):
    """A file declares a schema major version this reader does not know."""
