"""Exception types shared across the simulator."""


class PalpsimError(Exception):
    """Base class for all simulator errors."""


class MeshLoadError(PalpsimError):
    """Raised when mesh bytes cannot be parsed into a valid triangle mesh."""


class ConfigurationError(PalpsimError):
    """Raised for invalid scenario, session, or runtime configuration."""


class CalibrationError(PalpsimError):
    """Raised when force-meter calibration input is unusable."""


class SequencingError(PalpsimError):
    """Raised when an operation arrives out of order on the simulation timeline."""


class TapeError(PalpsimError):
    """Raised for malformed probe-tape files; message names the offending line."""


class ProtocolError(PalpsimError):
    """Raised for malformed or unknown wire messages."""
