"""Exact harmonic and microlocal analysis over p-adic and Laurent-series local fields."""

__version__ = "0.1.0"

from .cyclo import CycloScalar
from .distribution import BFunctionView, additivity_check
from .fibers import (
    ClusterUnresolved,
    FiberProblem,
    LevelReport,
    OnDiscriminant,
    fiber_integrate,
    level_measure,
    padic_roots,
)
from .fields import (
    INF,
    LaurentField,
    LaurentPoly,
    LocalField,
    PAdicField,
    Polyball,
    field_spec,
    make_field,
    parse_field_spec,
)

__all__ = [
    "CycloScalar",
    "INF",
    "LocalField",
    "PAdicField",
    "LaurentField",
    "LaurentPoly",
    "Polyball",
    "make_field",
    "parse_field_spec",
    "field_spec",
    "BFunctionView",
    "additivity_check",
    "FiberProblem",
    "LevelReport",
    "ClusterUnresolved",
    "OnDiscriminant",
    "padic_roots",
    "fiber_integrate",
    "level_measure",
    "__version__",
]
