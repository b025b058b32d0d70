"""Shared builders and inequality checkers for the test suite."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np

from foldrate import Op, RecurrenceSpec, Term, compute_sequence, derive_constants
from foldrate.scalars import ln_fraction

MIXED_EXAMPLE = "sum 2 2\nsum 3 3\nsum 4 4\nmax 5 5\nmax 6 6"


def random_spec(rng: random.Random, max_terms: int = 4, max_arity: int = 5,
                max_weight: int = 8, kind: str = "mixed") -> RecurrenceSpec:
    """A random valid spec with at least one term of arity >= 2.

    kind: "sum" (all sum terms), "max" (one max term), "mixed" (anything).
    Weights are rationals in (0, max_weight].
    """
    def weight():
        den = rng.choice((1, 1, 1, 2, 3, 4))
        return Fraction(rng.randint(1, max_weight * den), den)

    if kind == "max":
        # equality with the max oracle needs a single term (see test_trees)
        return RecurrenceSpec((Term(Op.MAX, rng.randint(2, max_arity), weight()),))
    count = rng.randint(2 if kind == "mixed" else 1, max_terms)
    terms = []
    for i in range(count):
        op = Op.SUM if kind == "sum" else rng.choice((Op.SUM, Op.MAX))
        if kind == "mixed" and i < 2:
            op = (Op.SUM, Op.MAX)[i]  # guarantee one of each family
        arity = rng.randint(1, max_arity)
        if i == count - 1 and all(t.arity < 2 for t in terms) and arity < 2:
            arity = rng.randint(2, max_arity)
        terms.append(Term(op, arity, weight()))
    rng.shuffle(terms)
    return RecurrenceSpec(tuple(terms))


def spec_kind(spec: RecurrenceSpec) -> str:
    ops = {t.op for t in spec.terms}
    if ops == {Op.SUM}:
        return "sum"
    if ops == {Op.MAX}:
        return "max"
    return "mixed"


def tree_count_total(spec: RecurrenceSpec, n_max: int) -> int:
    """Total number of labelled trees of sizes 1..n_max.

    Counting trees is the same recurrence with every weight set to 1 and
    every operator made a sum, so the engine computes it directly.
    """
    unit = RecurrenceSpec(tuple(Term(Op.SUM, t.arity, Fraction(1)) for t in spec.terms))
    table = compute_sequence(unit, n_max, domain="exact")
    return sum(int(table.value(n).value) for n in range(1, n_max + 1))


# -- inequality suites ---------------------------------------------------
#
# Each checker returns the number of violating index combinations, so a
# passing table yields 0.  Exact tables are compared with rational
# arithmetic where the inequality is rational; log tables compare ln
# values with the given slack.


def violations_supermulti(table, slack: float = 0.0) -> int:
    """kstar * s_u * s_v <= s_{u+v+1} for all u + v + 1 <= table.n."""
    spec = table.spec
    kstar = spec.kstar
    bad = 0
    if table.domain_name == "exact":
        s = [table.value(i).value for i in range(table.n + 1)]
        for u in range(table.n):
            for v in range(table.n - u):
                if kstar * s[u] * s[v] > s[u + v + 1]:
                    bad += 1
        return bad
    lnS = table.ln_values()
    ln_kstar = ln_fraction(kstar)
    for w in range(1, table.n + 1):
        m = w - 1
        best = float((lnS[: m + 1] + lnS[m::-1]).max())
        if ln_kstar + best > lnS[w] + slack:
            bad += 1
    return bad


def violations_history(table, slack: float = 0.0) -> int:
    """s_n <= L * (n-1) * s_1 * s_{n-1} for all 2 <= n <= table.n."""
    spec = table.spec
    L = spec.max_arity
    s1 = spec.weight_sum
    bad = 0
    if table.domain_name == "exact":
        s = [table.value(i).value for i in range(table.n + 1)]
        for n in range(2, table.n + 1):
            if s[n] > L * (n - 1) * s1 * s[n - 1]:
                bad += 1
        return bad
    lnS = table.ln_values()
    ln_s1 = ln_fraction(s1)
    for n in range(2, table.n + 1):
        if lnS[n] > math.log(L * (n - 1)) + ln_s1 + lnS[n - 1] + slack:
            bad += 1
    return bad


def _decompose_range(n: int, L: int) -> range:
    lo = Fraction(n - 1, L + 1)
    hi = Fraction(L * n + 1, L + 1)
    return range(math.ceil(lo), math.floor(hi) + 1)


def violations_decompose(table, slack: float = 0.0) -> int:
    """All-sum decomposition bound: s_n <= sum over i in the subtree-size
    interval of L * (n-i) * s_{n-i} * s_i, for 2 <= n <= table.n.
    """
    spec = table.spec
    assert spec_kind(spec) == "sum", "the decomposition bound needs an all-sum spec"
    L = spec.max_arity
    bad = 0
    if table.domain_name == "exact":
        s = [table.value(i).value for i in range(table.n + 1)]
        for n in range(2, table.n + 1):
            rhs = sum(L * (n - i) * s[n - i] * s[i] for i in _decompose_range(n, L))
            if s[n] > rhs:
                bad += 1
        return bad
    lnS = table.ln_values()
    for n in range(2, table.n + 1):
        idx = np.array(_decompose_range(n, L), dtype=np.int64)
        parts = np.log(L * (n - idx).astype(np.float64)) + lnS[n - idx] + lnS[idx]
        rhs = float(np.logaddexp.reduce(parts))
        if lnS[n] > rhs + slack:
            bad += 1
    return bad


def violations_submulti(table, slack: float = 0.0) -> int:
    """Submultiplicative transform: for 1 <= n <= table.n and 0 <= m <= n,
    s_n <= (s1 * L^2 * n^3 / kstar)^(alpha * ln n) * s_m * s_{n-m},
    compared in ln space (the prefactor is irrational).
    """
    spec = table.spec
    consts = derive_constants(spec)
    ln_ratio_base = ln_fraction(consts.s1 * consts.max_arity ** 2 / consts.kstar)
    lnS = table.ln_values()
    bad = 0
    for n in range(1, table.n + 1):
        pref = consts.alpha * math.log(n) * (ln_ratio_base + 3.0 * math.log(n))
        lhs = lnS[n] - pref - slack
        pairs = lnS[: n + 1] + lnS[n::-1]
        bad += int((pairs < lhs).sum())
    return bad
