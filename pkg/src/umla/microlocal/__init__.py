"""Microlocal layer: scaling subgroups, cones, smoothness, and map calculus."""

from .subgroup import LambdaSubgroup, parse_subgroup_spec
from .cones import BaseBall, BaseFull, BasePoint, LambdaCone, OrbitRayCell, TaggedCell
from .smoothness import SmoothnessVerdict, is_smooth_at
from .wavefront import tensor_bound_cone, wavefront_exact, zero_section_cells
from .prescribe import PrescribedDistribution, prescribe_wavefront
from .phase import (
    PhaseBoundReport,
    PhaseCertificationError,
    oscillatory_integral,
    stationary_phase_bound,
)
from .sequences import ConvergenceReport, sgamma_convergence_check
from .maps import (
    AffineMap,
    MapError,
    NfIntersectsWF,
    NotProperOnSupport,
    UnsupportedMap,
    WFCollision,
    normal_cone,
    product_dist,
    pullback,
    pushforward,
)

__all__ = [
    "LambdaSubgroup",
    "parse_subgroup_spec",
    "BaseBall",
    "BaseFull",
    "BasePoint",
    "LambdaCone",
    "OrbitRayCell",
    "TaggedCell",
    "SmoothnessVerdict",
    "is_smooth_at",
    "tensor_bound_cone",
    "wavefront_exact",
    "zero_section_cells",
    "PrescribedDistribution",
    "prescribe_wavefront",
    "PhaseBoundReport",
    "PhaseCertificationError",
    "oscillatory_integral",
    "stationary_phase_bound",
    "ConvergenceReport",
    "sgamma_convergence_check",
    "AffineMap",
    "MapError",
    "NfIntersectsWF",
    "NotProperOnSupport",
    "UnsupportedMap",
    "WFCollision",
    "normal_cone",
    "product_dist",
    "pullback",
    "pushforward",
]
