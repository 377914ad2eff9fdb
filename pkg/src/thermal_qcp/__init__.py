"""Thermal quantum discord, entanglement and critical points of spin chains."""

from .cp import (
    CPEstimate,
    CPTable,
    Method,
    ModelPoint,
    Quantity,
    RegrowthReport,
    RingModel,
    SweepCurve,
    XXZModel,
    XYModel,
    cp_vs_temperature,
    detect_branch_switch,
    estimate_cp,
    numerical_derivative,
    regrowth_scan,
    sweep,
)
from .errors import (
    ConvergenceError,
    DomainError,
    ModelPointError,
    NumericalInconsistencyError,
    QuadratureError,
    SymmetryViolationError,
    ThermalQCPError,
)
from .xstate import (
    Branch,
    CorrelationReport,
    XState,
    binary_entropy_f,
    brute_force_conditional_entropy,
    concurrence,
    conditional_entropy_closed,
    correlation_report,
    eof,
    quantum_discord,
    xstate_eigenvalues,
)
from .xxz import NLIEConfig, XXZParams, critical_point_first_order, critical_point_infinite_order
from .xy import XYParams

__version__ = "0.1.0"
