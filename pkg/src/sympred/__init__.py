"""Symplectic connections on orbit spaces of quadrics, with numerical verification."""
__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .symplectic import (  # noqa: E402
    CaseTag,
    ClassificationLabel,
    Generator,
    classify_quotient,
    generator_from_json,
    make_case_minus_id,
    make_case_nilpotent,
    make_case_plus_id,
    make_explicit,
    make_remark,
    standard_form,
)
from .quadric import Quadric, flow, sample_point, sample_points  # noqa: E402
from .curvature import closed_form_curvature, kappa_closed, u_form  # noqa: E402
from .chart import curvature_fd, make_chart  # noqa: E402
from .verify import RunConfig, VerificationReport, run_verify  # noqa: E402

__all__ = [
    "CaseTag",
    "ClassificationLabel",
    "Generator",
    "Quadric",
    "RunConfig",
    "VerificationReport",
    "classify_quotient",
    "closed_form_curvature",
    "curvature_fd",
    "flow",
    "generator_from_json",
    "kappa_closed",
    "make_case_minus_id",
    "make_case_nilpotent",
    "make_case_plus_id",
    "make_chart",
    "make_explicit",
    "make_remark",
    "run_verify",
    "sample_point",
    "sample_points",
    "standard_form",
    "u_form",
]
