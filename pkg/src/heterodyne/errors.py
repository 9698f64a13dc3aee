"""Exception hierarchy shared by every module of the package."""


class HeterodyneError(Exception):
    """Base class for all package errors."""


class InvalidSpec(HeterodyneError, ValueError):
    pass


class TruncationTooSmall(HeterodyneError, ValueError):
    """The Fock cutoff cannot hold the requested state to the required accuracy."""


class IndexBeyondTruncation(HeterodyneError, ValueError):
    pass


class EnvelopeFailure(HeterodyneError, RuntimeError):
    """Rejection sampling could not bound the Q-function with its envelope."""


class DegreeOutOfRange(HeterodyneError, ValueError):
    pass


class EmptySample(HeterodyneError, ValueError):
    pass


class TooFewSamples(HeterodyneError, ValueError):
    pass


class PhaseOutOfDomain(HeterodyneError, ValueError):
    """The shift-operator kernel has no finite variance at this phase."""


class IndexOutOfRange(HeterodyneError, ValueError):
    pass


class CutoffTooLarge(HeterodyneError, ValueError):
    pass


class ConfigError(HeterodyneError, ValueError):
    """Experiment configuration failed to parse or validate.

    ``field`` and ``line`` locate the offending entry when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
