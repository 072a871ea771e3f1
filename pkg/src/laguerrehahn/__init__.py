"""Deformed Laguerre-Hahn orthogonal polynomials: Lax pairs, Toda flows,
and a high-precision verification suite for the induced Painleve VI system."""

__version__ = "0.1.0"

from .errors import (
    CompatibilityError,
    DegenerateTranscendentError,
    DegreeOverflowError,
    IntegrabilityError,
    LaguerreHahnError,
    PhiMismatchError,
    QuadratureNonconvergence,
    RegularityError,
    SampleAtPoleError,
)
from .numerics import Jet2, Mat2, Poly, PrecisionContext, jet_lift, jet_var_t
from .weights import MomentTable, RiccatiQuadruple, WeightParams, moment, moment_table
from .opseq import RecurrenceCoeffs, eval_polys, recurrence_from_moments
from .mobius import TildeSystem, build_tilde_system, closed_form_ladder
from .painleve import PainleveState, pvi_residual, pvi_state

__all__ = [
    "__version__",
    "CompatibilityError",
    "DegenerateTranscendentError",
    "DegreeOverflowError",
    "IntegrabilityError",
    "LaguerreHahnError",
    "PhiMismatchError",
    "QuadratureNonconvergence",
    "RegularityError",
    "SampleAtPoleError",
    "Jet2",
    "Mat2",
    "Poly",
    "PrecisionContext",
    "jet_lift",
    "jet_var_t",
    "MomentTable",
    "RiccatiQuadruple",
    "WeightParams",
    "moment",
    "moment_table",
    "RecurrenceCoeffs",
    "eval_polys",
    "recurrence_from_moments",
    "TildeSystem",
    "build_tilde_system",
    "closed_form_ladder",
    "PainleveState",
    "pvi_residual",
    "pvi_state",
]
