"""Exception hierarchy shared by the library and the command line driver."""


class QNDError(Exception):
    """Base class for every error raised by qndtomo."""


class ConfigError(QNDError, ValueError):
    """One or more configuration violations.

    ``errors`` holds every violation found, not just the first one.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class PreconditionError(QNDError, ValueError):
    """A numerical precondition does not hold (maps to CLI exit code 3)."""


class OffGridError(PreconditionError):
    """A wavefunction carries non-negligible amplitude at the edge of its grid."""


class ZeroProbabilityError(PreconditionError):
    """Conditioning on an outcome whose probability density vanishes."""


class TruncationError(PreconditionError):
    """A Fock-basis state has too much weight near the cutoff."""
