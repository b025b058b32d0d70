"""Evaluate sum/max convolution recurrences and bound their growth rate.

A recurrence here is a weighted list of terms.  Starting from s_0 = 1, each
term with arity l and weight k contributes either

    k * sum  of s_{x_1} * ... * s_{x_l}   over all ordered splits
    k * max  of s_{x_1} * ... * s_{x_l}   x_1 + ... + x_l = n - 1

and s_n is the sum of the per-term contributions.  The package computes such
sequences exactly (big rationals) or in a log-domain float representation,
derives certified lower/upper bounds on lim s_n^(1/n), and cross-checks the
machinery against an exhaustive tree enumeration oracle.
"""

from .recurrence import (
    GrowthConstants,
    Op,
    RecurrenceSpec,
    SpecError,
    SpecSyntaxError,
    SpecValidationError,
    Term,
    derive_constants,
    parse_spec,
    parse_spec_json,
    render_spec,
)
from .scalars import ExactScalar, LogScalar, ln_fraction, ln_int, max_of, nth_root_ln
from .engine import (
    DEFAULT_MEMORY_LIMIT,
    CacheCorruptError,
    CacheError,
    CacheMismatchError,
    MemoryBudgetError,
    SequenceTable,
    compute_sequence,
    load_cache,
    save_cache,
)
from .bounds import (
    BoundsEntry,
    BoundsReport,
    KnownRateResult,
    evaluate_bounds,
    known_rate_check,
    lower_bound_ln,
    refine,
    sup_lower_bound_ln,
    upper_bound_ln,
    upper_coefficients,
)
from .trees import (
    DEFAULT_SIZE_CAP,
    TermTree,
    check_subtree_lemma,
    enumerate_trees,
    oracle_max,
    oracle_sum,
    oracle_summary,
    subtree_size_interval,
    tree_values,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsEntry",
    "BoundsReport",
    "CacheCorruptError",
    "CacheError",
    "CacheMismatchError",
    "DEFAULT_MEMORY_LIMIT",
    "DEFAULT_SIZE_CAP",
    "ExactScalar",
    "GrowthConstants",
    "KnownRateResult",
    "LogScalar",
    "MemoryBudgetError",
    "Op",
    "RecurrenceSpec",
    "SequenceTable",
    "SpecError",
    "SpecSyntaxError",
    "SpecValidationError",
    "Term",
    "TermTree",
    "check_subtree_lemma",
    "compute_sequence",
    "derive_constants",
    "enumerate_trees",
    "evaluate_bounds",
    "known_rate_check",
    "ln_fraction",
    "ln_int",
    "load_cache",
    "lower_bound_ln",
    "max_of",
    "nth_root_ln",
    "oracle_max",
    "oracle_sum",
    "oracle_summary",
    "parse_spec",
    "parse_spec_json",
    "refine",
    "render_spec",
    "save_cache",
    "subtree_size_interval",
    "sup_lower_bound_ln",
    "tree_values",
    "upper_bound_ln",
    "upper_coefficients",
]
