"""Exception types shared across the package."""


class SphereOtError(Exception):
    """Base class for all sphereot errors."""


class ZeroVector(SphereOtError):
    """Normalization of a (numerically) zero vector was requested."""


class DimensionMismatch(SphereOtError):
    """Operands live in different ambient dimensions."""


class NonConvergent(SphereOtError):
    """An iterative solve failed to reach its tolerance."""


class InvalidKappa(SphereOtError):
    """vMF concentration must be strictly positive."""


class InvalidRange(SphereOtError):
    """A band specification violates its angular bounds."""


class NonScalarOutput(SphereOtError):
    """Differentiation requires a scalar-valued graph output."""


class InvalidDims(SphereOtError):
    """Potential network dimensions out of range."""


class VersionMismatch(SphereOtError):
    """Checkpoint was written by an incompatible format version."""


class CorruptCheckpoint(SphereOtError):
    """Checkpoint file is truncated or fails its checksum."""


class PairingLengthMismatch(SphereOtError):
    """Paired batches must have equal length."""


class NonSquare(SphereOtError):
    """Assignment solving needs a square cost matrix."""


class NonFinite(SphereOtError):
    """Matrix entries must all be finite."""


class SizeMismatch(SphereOtError):
    """Point clouds must have equal cardinality."""


class EmptyInput(SphereOtError):
    """Operation needs at least one point."""


class ParseError(SphereOtError):
    """Point file could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NormViolation(SphereOtError):
    """A point-file row is not unit norm within tolerance."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EmptyFile(SphereOtError):
    """Point file contains no rows."""


class ConfigError(SphereOtError):
    """Run configuration failed validation."""


class DivergenceDetected(SphereOtError):
    """Training produced a non-finite loss."""


class NonFiniteLoss(DivergenceDetected):
    """A single optimization step produced a non-finite loss."""
