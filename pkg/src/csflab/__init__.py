"""Numerical laboratory for curve shortening flow of closed space curves."""

from .errors import (
    BlowUp,
    ConfigError,
    CSFLabError,
    DegenerateCurve,
    IdentityUnavailable,
    InsufficientData,
    InvalidParams,
    UndefinedForZeroTau,
)
from .flow import FlowConfig, FlowState, RunResult, StopReason, run, step
from .functionals import FunctionalSample, check_identity, gaussian_entropy, sample
from .geometry import DiscreteCurve, FrenetField, frenet, integrate_scalar, resample_uniform_arclength
from .scenarios import count_flat_points, is_twisted, make

__version__ = "0.1.0"
