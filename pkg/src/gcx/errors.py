"""Exception hierarchy shared across the package."""


class GcxError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GcxError, ValueError):
    """A caller-supplied argument violates an operation's precondition."""


class CapacityError(GcxError):
    """An exact algorithm was asked to run beyond its size bound."""


class FormatError(GcxError):
    """An input file is syntactically readable but semantically malformed."""


class TrainingError(GcxError):
    """Training diverged; carries the epoch at which the loss became non-finite."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"loss became non-finite at epoch {epoch}")


class UnsupportedLayerError(GcxError):
    """Concept discovery was requested on a layer that is not a convolution."""


class EmptyConceptError(GcxError):
    """A concept query referenced a concept with no member nodes."""


class EmptyReportError(GcxError):
    """Every concept was skipped, so no summary statistics exist."""


class ArtifactError(GcxError):
    """Base class for run-artifact persistence failures."""


class MissingArtifactError(ArtifactError):
    """A required artifact file is absent."""


class VersionMismatchError(ArtifactError):
    """The artifact was written by an incompatible format version."""


class HashMismatchError(ArtifactError):
    """An artifact file does not match the hash recorded in the manifest."""
