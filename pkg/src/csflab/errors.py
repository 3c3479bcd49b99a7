"""Exception types raised across the package."""


class CSFLabError(Exception):
    """Base class for all package errors."""


class DegenerateCurve(CSFLabError):
    """Adjacent nodes collided or the parametrization speed vanished."""


class InvalidParams(CSFLabError, ValueError):
    """Preset or configuration parameters are out of range."""


class IdentityUnavailable(CSFLabError):
    """An evolution identity cannot be evaluated on the given snapshots."""


class InsufficientData(CSFLabError):
    """Too few (or non-blowing-up) snapshots to fit a singular time."""


class UndefinedForZeroTau(CSFLabError, ZeroDivisionError):
    """The reaction first integral needs strictly positive torsion."""


class BlowUp(CSFLabError):
    """Finite-time divergence of the reaction ODE.

    The partial trajectory up to the guard is kept on ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ConfigError(CSFLabError):
    """Bad configuration file or command-line values."""
