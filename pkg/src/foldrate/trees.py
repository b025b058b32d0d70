"""Exhaustive tree enumeration: the independent cross-check for the engine.

A sequence value can be read off a family of labelled trees: every vertex
carries one term of the recurrence and exactly arity-many ordered branches,
each branch either empty or another such tree.  A tree's value is the
product of its vertex weights.  Summing values over all trees with n
vertices reproduces s_n exactly when every term is a sum term, and the
maximum over values reproduces s_n when the recurrence is a single max
term; for mixed recurrences the two aggregates bracket s_n.

Everything here is deliberately brute force - streamed enumeration with no
memoisation - so that agreement with the convolution engine is evidence,
not circularity.  A size cap keeps accidental combinatorial explosions
from hanging a test run; pass a bigger cap explicitly to go past it.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement

from .recurrence import RecurrenceSpec
from .scalars import ExactScalar

__all__ = [
    "DEFAULT_SIZE_CAP",
    "TermTree",
    "check_subtree_lemma",
    "enumerate_trees",
    "oracle_max",
    "oracle_sum",
    "oracle_summary",
    "subtree_size_interval",
    "tree_values",
]

DEFAULT_SIZE_CAP = 9


class TermTree:
    """A labelled tree: term index at the root, one slot per arity."""

    __slots__ = ("term_index", "branches", "size")

    def __init__(self, term_index: int, branches: tuple):
        self.term_index = term_index
        self.branches = branches
        self.size = 1 + sum(b.size for b in branches if b is not None)

    def value(self, spec: RecurrenceSpec) -> Fraction:
        """Product of the weights of all vertices."""
        total = Fraction(1)
        stack = [self]
        while stack:
            node = stack.pop()
            total *= spec.terms[node.term_index].weight
            stack.extend(b for b in node.branches if b is not None)
        return total

    def subtree_sizes(self) -> list[int]:
        """Vertex counts of every subtree (one entry per vertex)."""
        sizes = []
        stack = [self]
        while stack:
            node = stack.pop()
            sizes.append(node.size)
            stack.extend(b for b in node.branches if b is not None)
        return sizes

    def __eq__(self, other):
        return (isinstance(other, TermTree)
                and self.term_index == other.term_index
                and self.branches == other.branches)

    def __hash__(self):
        return hash((self.term_index, self.branches))

    def __repr__(self):
        inner = ", ".join("_" if b is None else repr(b) for b in self.branches)
        return f"T{self.term_index}({inner})"


def _compositions(total: int, parts: int):
    """Ordered nonnegative integer splits, lexicographically ascending."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _check_cap(n: int, size_cap: int):
    if n < 1:
        raise ValueError(f"tree size must be >= 1, got {n}")
    if n > size_cap:
        raise ValueError(
            f"tree size {n} exceeds the enumeration cap {size_cap}; "
            f"pass size_cap={n} explicitly to force it"
        )


def enumerate_trees(spec: RecurrenceSpec, n: int, size_cap: int = DEFAULT_SIZE_CAP):
    """Yield every tree with n vertices, in a fixed deterministic order.

    Order: root term index ascending, then the branch-size split
    lexicographically, then recursively the same within each branch.
    """
    _check_cap(n, size_cap)
    yield from _trees(spec.terms, n)


def _trees(terms, n: int):
    for index, term in enumerate(terms):
        for sizes in _compositions(n - 1, term.arity):
            yield from _label_branches(terms, sizes, 0, index, ())


def _label_branches(terms, sizes, at, root_index, done):
    if at == len(sizes):
        yield TermTree(root_index, done)
        return
    size = sizes[at]
    if size == 0:
        yield from _label_branches(terms, sizes, at + 1, root_index, done + (None,))
        return
    for sub in _trees(terms, size):
        yield from _label_branches(terms, sizes, at + 1, root_index, done + (sub,))


def tree_values(spec: RecurrenceSpec, n: int, size_cap: int = DEFAULT_SIZE_CAP):
    """Yield the value of every tree with n vertices, one per tree.

    Same traversal order as enumerate_trees, but carries the running
    weight product instead of building tree objects.
    """
    _check_cap(n, size_cap)
    plan = [(t.arity, t.weight) for t in spec.terms]

    def values(m):
        for arity, weight in plan:
            for sizes in _compositions(m - 1, arity):
                yield from scaled(sizes, 0, weight)

    def scaled(sizes, at, acc):
        if at == len(sizes):
            yield acc
            return
        size = sizes[at]
        if size == 0:
            yield from scaled(sizes, at + 1, acc)
            return
        for v in values(size):
            yield from scaled(sizes, at + 1, acc * v)

    yield from values(n)


def oracle_summary(spec: RecurrenceSpec, n: int, size_cap: int = DEFAULT_SIZE_CAP):
    """(count, sum of values, max of values) over all trees with n vertices."""
    count = 0
    total = Fraction(0)
    best = None
    for v in tree_values(spec, n, size_cap):
        count += 1
        total += v
        if best is None or v > best:
            best = v
    return count, total, best


def oracle_sum(spec: RecurrenceSpec, n: int, size_cap: int = DEFAULT_SIZE_CAP) -> ExactScalar:
    """Exact sum of tree values; equals s_n for all-sum recurrences."""
    _, total, _ = oracle_summary(spec, n, size_cap)
    return ExactScalar(total)


def oracle_max(spec: RecurrenceSpec, n: int, size_cap: int = DEFAULT_SIZE_CAP) -> ExactScalar:
    """Exact max of tree values; equals s_n for a single pure-max term."""
    _, _, best = oracle_summary(spec, n, size_cap)
    return ExactScalar(best)


# -- subtree size interval ----------------------------------------------


def subtree_size_interval(spec: RecurrenceSpec, n: int) -> tuple[Fraction, Fraction]:
    """Closed interval that must contain some subtree size, L = max arity."""
    L = spec.max_arity
    return Fraction(n - 1, L + 1), Fraction(L * n + 1, L + 1)


def _partitions(total: int, parts: int, largest: int):
    """Partitions of total into exactly ``parts`` parts, descending, <= largest."""
    if parts == 1:
        if 1 <= total <= largest:
            yield (total,)
        return
    # first part is the largest; at least ceil(total/parts), at most min(largest, total-parts+1)
    lo = -(-total // parts)
    for first in range(min(largest, total - parts + 1), lo - 1, -1):
        for rest in _partitions(total - first, parts - 1, first):
            yield (first,) + rest


def _shapes(n: int, max_children: int, memo: dict) -> tuple:
    """All unordered rooted trees with n vertices and degree <= max_children.

    A shape is a sorted tuple of child shapes.  Term labels, branch order
    and empty slots do not change subtree sizes, so checking size
    properties over shapes covers every labelled tree.
    """
    key = n
    got = memo.get(key)
    if got is not None:
        return got
    if n == 1:
        memo[key] = ((),)
        return memo[key]
    out = []
    for k in range(1, min(max_children, n - 1) + 1):
        for sizes in _partitions(n - 1, k, n - 1):
            groups = []
            run_start = 0
            for i in range(1, k + 1):
                if i == k or sizes[i] != sizes[run_start]:
                    size = sizes[run_start]
                    copies = i - run_start
                    pool = _shapes(size, max_children, memo)
                    groups.append(list(combinations_with_replacement(pool, copies)))
                    run_start = i
            out.extend(_cross(groups))
    memo[key] = tuple(out)
    return memo[key]


def _cross(groups):
    if not groups:
        yield ()
        return
    for head in groups[0]:
        for tail in _cross(groups[1:]):
            yield head + tail


def _shape_sizes(shape, out):
    size = 1
    for child in shape:
        size += _shape_sizes(child, out)
    out.append(size)
    return size


def check_subtree_lemma(spec: RecurrenceSpec, n: int,
                        size_cap: int = DEFAULT_SIZE_CAP) -> bool:
    """Every tree with n vertices has a subtree whose size falls in
    subtree_size_interval; for n >= 2 that subtree is automatically proper.

    Verified exhaustively over the unordered shapes trees can take: the
    check depends only on subtree sizes, never on labels or branch order,
    so the shape quotient covers all trees while staying enumerable even
    where the labelled count explodes.
    """
    _check_cap(n, size_cap)
    lo, hi = subtree_size_interval(spec, n)
    if n == 1:
        return lo <= 1 <= hi
    L = spec.max_arity
    for shape in _shapes(n, L, {}):
        sizes: list[int] = []
        _shape_sizes(shape, sizes)
        if not any(lo <= size <= hi and size < n for size in sizes):
            return False
    return True
