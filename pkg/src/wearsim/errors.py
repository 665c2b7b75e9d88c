"""Exception hierarchy shared across the toolkit.

Errors are grouped by how the CLI maps them to exit codes: anything under
InvalidInput exits with 2, I/O failures with 4. Infeasible placement is not
an error (it is reported in the SelectionResult), exit code 3 is produced
by the CLI itself.
"""


class WearsimError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(WearsimError):
    """Invalid data, configuration, or file content (CLI exit code 2)."""


class IoFailure(WearsimError):
    """Filesystem or network level failure (CLI exit code 4)."""


# kinematics
class DegenerateTriangle(InvalidInput):
    """Patch triangle has (near-)zero area in some frame."""


class NotARotation(InvalidInput):
    """Matrix failed the orthonormality / determinant check."""


class TooShortSequence(InvalidInput):
    """Mesh sequence has fewer than three frames."""


# patch sampling
class DisconnectedMesh(InvalidInput):
    """Mesh edge graph has more than one connected component."""


class BadCount(InvalidInput):
    """Requested sample count outside [1, vertex_count]."""


class IsolatedVertex(InvalidInput):
    """Vertex has no incident face."""


# sensor model
class BadCutoff(InvalidInput):
    """Filter cutoff outside (0, rate/2)."""


class EmptyTrace(InvalidInput):
    """Trace has no samples (or too few for the operation)."""


# utility evaluation
class DegenerateLabels(InvalidInput):
    """Fewer than two distinct activity labels."""


class EmptyTrainingSet(InvalidInput):
    pass


class EmptyTestSet(InvalidInput):
    pass


class InsufficientData(InvalidInput):
    """Not enough traces/windows for a location or activity."""


class UnknownActivity(InvalidInput):
    pass


class LengthMismatch(InvalidInput):
    pass


class ZeroVariance(InvalidInput):
    """Rank correlation undefined for an all-tied input."""


# placement optimization
class AllExcluded(InvalidInput):
    pass


class UnknownLocation(InvalidInput):
    pass


class TooManyLocations(InvalidInput):
    """Exhaustive search refused above its candidate cap."""


# pipeline I/O
class BadMagic(InvalidInput):
    pass


class TruncatedFile(InvalidInput):
    pass


class TopologyMismatch(InvalidInput):
    """Frames in an OBJ directory disagree on topology."""


class UnreadablePath(IoFailure):
    pass


class MalformedTable(InvalidInput):
    pass


class PipelineError(WearsimError):
    """Wraps a stage failure with stage and item context.

    Not raised across process boundaries; workers raise single-argument
    leaf errors (which pickle) and the orchestrator wraps them.
    """

    def __init__(self, stage: str, item, cause: BaseException):
        where = f"stage {stage!r}" if item is None else f"stage {stage!r}, {item!r}"
        super().__init__(f"{where}: {cause}")
        self.stage = stage
        self.item = item
        self.cause = cause


# explorer service
class PortInUse(IoFailure):
    pass


class BadWorkspace(InvalidInput):
    pass
