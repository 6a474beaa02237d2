"""Data models for systems, problems, cone programs, solutions and experiments."""

from .certificate import BoundCertificate
from .conic import ConicProgram, NonnegCone, PsdCone, SecondOrderCone, VariableSlice, ZeroCone
from .experiment import IdealInstance, InstanceResult, MetricSummary, NoiseSpec, RunManifest
from .problem import (
    ConstraintSet,
    ControlBall,
    EntryBox,
    IoInequality,
    IoStructure,
    LinearInequality,
    MopulProblem,
    ObjectiveSpec,
    OmegaMode,
    RateBounds,
)
from .solution import Solution, SolutionRecord, SolverConfig
from .system import ErrorNorm, SystemSpec, Trajectory
from .validation import ConstraintCheck, ValidationReport

__all__ = [
    "BoundCertificate",
    "ConicProgram",
    "ZeroCone",
    "NonnegCone",
    "SecondOrderCone",
    "PsdCone",
    "VariableSlice",
    "IdealInstance",
    "InstanceResult",
    "MetricSummary",
    "NoiseSpec",
    "RunManifest",
    "ConstraintSet",
    "ControlBall",
    "EntryBox",
    "IoInequality",
    "IoStructure",
    "LinearInequality",
    "MopulProblem",
    "ObjectiveSpec",
    "OmegaMode",
    "RateBounds",
    "Solution",
    "SolutionRecord",
    "SolverConfig",
    "ErrorNorm",
    "SystemSpec",
    "Trajectory",
    "ConstraintCheck",
    "ValidationReport",
]
