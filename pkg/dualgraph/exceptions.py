"""
Error hierarchy shared by every module. Each class carries the process exit code
the CLI reports when it escapes a subcommand.
"""

from typing import Optional


class DualGraphError(Exception):
    exit_code: int = 1

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.path = path

    def to_record(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "path": self.path,
        }


class DataValidationError(DualGraphError):
    exit_code = 3


class InvalidInputError(DataValidationError, ValueError):
    pass


class ShapeError(DataValidationError, ValueError):
    pass


# case container


class CaseFormatError(DataValidationError):
    pass


class MissingBlobError(CaseFormatError):
    pass


class ShapeMismatchError(CaseFormatError):
    pass


class NonMonotoneTimesError(CaseFormatError):
    pass


class ConnectivityRangeError(CaseFormatError):
    pass


class CaseInvariantError(CaseFormatError):
    pass


class ChannelMismatchError(DataValidationError):
    pass


class StatsMismatchError(DataValidationError):
    pass


class EmptySplitError(DataValidationError):
    pass


# mesh topology


class MeshTopologyError(DataValidationError):
    pass


class RepeatedNodeError(MeshTopologyError):
    pass


class NonManifoldError(MeshTopologyError):
    pass


class OrphanNodeError(MeshTopologyError):
    pass


class IsolatedNodeError(MeshTopologyError):
    pass


# autodiff


class NonScalarLossError(DualGraphError, ValueError):
    exit_code = 3


class DivergenceError(DualGraphError):
    """
    Raised when a loss, gradient, update or activation stops being finite.
    """

    exit_code = 4

    def __init__(
        self,
        message: str,
        epoch: Optional[int] = None,
        batch: Optional[int] = None,
        frame: Optional[int] = None,
    ):
        self.reason = message
        context = [
            f"{name}={value}"
            for name, value in (("epoch", epoch), ("batch", batch), ("frame", frame))
            if value is not None
        ]
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.frame = frame

    def with_context(self, **context) -> "DivergenceError":
        merged = {"epoch": self.epoch, "batch": self.batch, "frame": self.frame}
        merged.update({k: v for k, v in context.items() if v is not None})
        return DivergenceError(self.reason, **merged)


class GradientCheckError(DualGraphError):
    """Tape gradients disagree with finite differences."""

    exit_code = 4
