"""Exception hierarchy shared across the package."""


class RTGError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RTGError, ValueError):
    """A configuration document failed to parse or validate."""


class UnknownKeyError(ConfigError):
    """A configuration document contains a key that is not a known option."""


class UnsupportedFeatureError(ConfigError):
    """A configuration enables a feature this implementation rejects."""


class PlacementError(RTGError):
    """Initial placement constraints cannot be satisfied on this map."""


class InvalidActionError(RTGError, ValueError):
    """A joint action is malformed (wrong arity, illegal value, dead actor)."""


class TerminalStateError(RTGError):
    """step() was called on a finished game."""


class ReplayFormatError(RTGError):
    """A replay blob is malformed or fails integrity checks."""


class VersionMismatchError(ReplayFormatError):
    """A replay was produced by an incompatible format or engine version."""


class ChecksumError(ReplayFormatError):
    """A replay blob fails its CRC32 check."""


class ResimulationError(RTGError):
    """Re-simulating a replay did not reproduce the recorded outcome."""
