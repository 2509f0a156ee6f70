"""Exception hierarchy shared across the package."""


class TrajbenchError(Exception):
    """Base class for all errors raised by trajbench."""


class ParseError(TrajbenchError):
    """Malformed dataset input; carries frame ordinal and line number when known."""

    def __init__(self, message: str, frame: int | None = None, line: int | None = None):
        loc = []
        if frame is not None:
            loc.append(f"frame {frame}")
        if line is not None:
            loc.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.frame = frame
        self.line = line


class UnitError(TrajbenchError):
    """Unknown unit or incompatible dimensions in a conversion."""


class DatasetError(TrajbenchError):
    """Trajectory- or manifest-level contract violation."""


class FixtureError(TrajbenchError):
    """Infeasible fixture construction (bad window, too few frames, ...)."""


class SoapConfigError(TrajbenchError):
    """Descriptor parameters violate their invariants."""


class ModelError(TrajbenchError):
    """Model training or prediction failure."""


class ProtocolError(ModelError):
    """External-model protocol violation; `code` is the wire-level error code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"[{code}] {message}")
        self.code = code


class ReportError(TrajbenchError):
    """Records cannot be rendered (schema mismatch, missing metadata)."""
