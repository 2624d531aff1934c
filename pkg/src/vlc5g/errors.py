"""Exception hierarchy shared by all vlc5g modules."""


class VLC5GError(Exception):
    """Base class for every error raised by this package."""


class ParameterDomainError(VLC5GError, ValueError):
    """A distribution or model parameter lies outside its domain."""


class InsufficientDataError(VLC5GError, ValueError):
    """Too few observations (or no spread in them) to fit a model."""


class NoModelError(VLC5GError):
    """Every candidate family failed to fit."""


class FramingError(VLC5GError, ValueError):
    """A chip stream cannot be split into whole Manchester symbols."""


class CodeViolationError(VLC5GError, ValueError):
    """A Manchester chip pair is not a valid transition."""

    def __init__(self, position: int):
        super().__init__(f"Manchester code violation at chip pair {position}")
        self.position = position


class SyncError(VLC5GError, ValueError):
    """The frame preamble was not found."""


class IntegrityError(VLC5GError, ValueError):
    """Frame checksum mismatch."""


class InfeasibleLinkError(VLC5GError, ValueError):
    """The SNR threshold cannot be met at any distance."""


class ConfigurationError(VLC5GError, ValueError):
    """A segment or pipeline is configured inconsistently."""


class DegenerateTruncationError(ConfigurationError):
    """A truncation interval holds (almost) no probability mass."""


class ValidationError(VLC5GError, ValueError):
    """A scenario failed validation; ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
