"""Exception taxonomy shared by all dynacor modules."""


class DynacorError(Exception):
    """Base class for every error raised by this package."""


class InvalidShapeError(DynacorError):
    """Tensor/layer shape mismatch."""


class InvalidLabelError(DynacorError):
    """Class label outside [0, C)."""


class InvalidClassCountError(DynacorError):
    """Fewer than two classes where at least two are required."""


class InvalidDistributionError(DynacorError):
    """Probability vector does not normalize or has entries outside [0, 1]."""


class NumericFaultError(DynacorError):
    """Non-finite value encountered where finiteness is required (e.g. NaN gradients)."""


class GenerationError(DynacorError):
    """Synthetic data generation failed (e.g. impossible center placement)."""


class InvalidNoiseSpecError(DynacorError):
    """Noise specification violates its constraints (rate range, diagonal dominance)."""


class MissingTruthError(DynacorError):
    """An operation requiring ground-truth labels was called without them."""


class InvalidCorruptionConfigError(DynacorError):
    """Corruption configuration violates its constraints (gamma range, jitter)."""


class EmptyCorruptionError(DynacorError):
    """Corruption would produce an empty set (round(gamma * N) == 0)."""


class IncompatibleDatasetsError(DynacorError):
    """Datasets cannot be pooled (dimension/class mismatch or overlapping ids)."""


class TrainingDivergedError(DynacorError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class InvalidSignalError(DynacorError):
    """Unknown training-signal kind, or a signal kind unsupported by the caller."""


class InvalidLengthError(DynacorError):
    """Trajectory too short for the configured convolution stack."""


class DegenerateVectorError(DynacorError):
    """Vector norm below tolerance; cosine distance undefined."""


class EmptyClusterInitError(DynacorError):
    """Centroid initialization received an empty representation set."""


class DegenerateClusterError(DynacorError):
    """A clustering quantity is undefined (empty partitions, zero soft counts)."""


class DegenerateDataError(DynacorError):
    """Data unsuitable for mixture fitting (e.g. all values identical)."""


class IdMismatchError(DynacorError):
    """Two id sets that must match do not."""


class DegenerateSeparationError(DynacorError):
    """Cluster centroids coincide; separation ratio undefined."""


class UndefinedBaselineError(DynacorError):
    """Analytic baseline undefined for the given rate."""


class SplitDegenerateError(DynacorError):
    """A train/validation/test split lacks one of the two classes."""


class ParseError(DynacorError):
    """Malformed artifact file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(DynacorError):
    """Invalid run configuration (maps to CLI exit code 2)."""


class StageFailureError(DynacorError):
    """A pipeline stage failed (maps to CLI exit code 3)."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {message}")
