"""Exception and warning types raised across the package."""


class UltraspotError(ValueError):
    """Base class for all domain errors."""


# geometry / kinematics
class NonPositiveSpeed(UltraspotError):
    pass


class InsideSafetyRadius(UltraspotError):
    pass


# ranging
class DroppedPacket(UltraspotError):
    """Raised for a lost packet; ``track`` holds the now-unanchored track."""

    def __init__(self, message: str, track=None):
        super().__init__(message)
        self.track = track


class OutOfOrderSample(UltraspotError):
    pass


class NonPhysicalDistance(UltraspotError):
    pass


class NotAnchored(UltraspotError):
    pass


# footprints
class InsufficientSamples(UltraspotError):
    pass


class AmbiguousOrdering(UltraspotError):
    pass


# estimator
class DegenerateWindow(UltraspotError):
    pass


class MissingGroundTruth(UltraspotError):
    pass


# diversity
class EmptyBranchSet(UltraspotError):
    pass


class NoReliableDevice(UltraspotError):
    pass


# likelihood
class SingularCovariance(UltraspotError):
    pass


class ArityMismatch(UltraspotError):
    pass


class EmptyWindow(UltraspotError):
    pass


# simulator
class ConfigRejected(UltraspotError):
    pass


# trace I/O
class TraceError(UltraspotError):
    """A problem with a specific line of a trace file."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ParseError(TraceError):
    pass


class OrderViolation(TraceError):
    pass


class UnknownDevice(TraceError):
    pass


# warnings
class ZeroGainBranch(UserWarning):
    pass


class LeadExceedsEntry(UserWarning):
    pass
