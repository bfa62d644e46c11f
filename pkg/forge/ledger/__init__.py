"""
Parameter ledger: exact log-domain scales, constraint slacks, and the search for a.
"""

from .constraints import LedgerReport, check_constraints
from .logexpr import LogExpr, LogSum
from .params import LPolicy, ParameterSet, derive_scales, make_parameters
from .search import MinAResult, c0_sensitivity, find_min_a

__all__ = [
    "LogExpr", "LogSum",
    "LPolicy", "ParameterSet", "derive_scales", "make_parameters",
    "LedgerReport", "check_constraints",
    "MinAResult", "c0_sensitivity", "find_min_a",
]
