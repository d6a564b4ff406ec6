"""Term language for exact scalar formulas and term-defined distribution families."""

from .check import SC, VF, ZZ, RF, SortError, check, classify_cmp
from .evaluate import DEFAULT_RANGE_BUDGET, EvalError, evaluate
from .family import (
    DisSampleReport,
    DisSampleRow,
    FamilyDistribution,
    dis_sample,
    instantiate_b_function,
)
from .syntax import (
    Ac,
    Add,
    And,
    CexpSyntaxError,
    Cmp,
    Const,
    Indicator,
    Mul,
    Neg,
    Node,
    Not,
    Or,
    Ord,
    Pow,
    Psi,
    QPow,
    Sub,
    SumRF,
    SumZ,
    Var,
    parse,
    render,
    substitute,
    term_from_json,
    term_to_json,
    walk,
)

__all__ = [
    "Ac",
    "Add",
    "And",
    "CexpSyntaxError",
    "Cmp",
    "Const",
    "DEFAULT_RANGE_BUDGET",
    "DisSampleReport",
    "DisSampleRow",
    "EvalError",
    "FamilyDistribution",
    "Indicator",
    "Mul",
    "Neg",
    "Node",
    "Not",
    "Or",
    "Ord",
    "Pow",
    "Psi",
    "QPow",
    "RF",
    "SC",
    "SortError",
    "Sub",
    "SumRF",
    "SumZ",
    "VF",
    "Var",
    "ZZ",
    "check",
    "classify_cmp",
    "dis_sample",
    "evaluate",
    "instantiate_b_function",
    "parse",
    "render",
    "substitute",
    "term_from_json",
    "term_to_json",
    "walk",
]
