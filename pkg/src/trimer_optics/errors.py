"""Exception hierarchy.

The CLI maps the four families below onto its exit codes, so every error
raised by the library derives from exactly one of them.
"""


class TrimerOpticsError(Exception):
    pass


class KinematicError(TrimerOpticsError):
    """Requested outgoing wave does not exist (exit code 3)."""


class ChannelClosed(KinematicError):
    pass


class EvanescentOrder(KinematicError):
    pass


class TotalReflection(KinematicError):
    pass


class DegenerateIncidence(KinematicError):
    pass


class GeometryError(TrimerOpticsError):
    """Grating geometry leaves nothing to diffract from (exit code 4)."""


class ClosedSlit(GeometryError):
    pass


class SolverError(TrimerOpticsError):
    """Numerical solver failed a convergence gate (exit code 5)."""


class NoConvergence(SolverError):
    pass


class GridTooCoarse(SolverError):
    pass


class QuadratureNotConverged(SolverError):
    pass


class StrengthNotCalibrated(SolverError):
    pass


class MeshNotConverged(SolverError):
    pass


class WindowEmpty(TrimerOpticsError):
    """A search window holds no state; distinct from a solver failure."""


class NoBoundState(WindowEmpty):
    pass


class NonIdentifiable(TrimerOpticsError):
    pass


class AllUnassigned(TrimerOpticsError):
    pass


class ParseError(TrimerOpticsError, ValueError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class MissingParameter(ParseError):
    def __init__(self, key, form=None):
        msg = f"missing parameter {key!r}"
        if form is not None:
            msg += f" for form {form!r}"
        super().__init__(msg, key=key)
