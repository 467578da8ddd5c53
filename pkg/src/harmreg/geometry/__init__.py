"""Domains, transversal curve families, and the geometric verifiers."""

from harmreg.geometry.domain import Domain, ball, ellipse, ellipsoid
from harmreg.geometry.families import (
    CurveFamily,
    ProjectionResult,
    TransDistReport,
    arc_length_reparametrize,
    check_dilation,
    check_family,
    custom_family,
    dilate_family,
    make_family,
    project_along,
    verify_trans_dist,
)

__all__ = [
    "CurveFamily",
    "Domain",
    "ProjectionResult",
    "TransDistReport",
    "arc_length_reparametrize",
    "ball",
    "check_dilation",
    "check_family",
    "custom_family",
    "dilate_family",
    "ellipse",
    "ellipsoid",
    "make_family",
    "project_along",
    "verify_trans_dist",
]
