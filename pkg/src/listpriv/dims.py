"""Exact k-Littlestone and k-monotone dimensions, with brute-force oracles.

The fast paths work on bitmasks of concept indices: bit ``j`` of a mask is
set when concept ``j`` survives the restrictions made so far.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any

from .core import ConceptClass
from .errors import BudgetError, ParameterError
from .trees import ExplicitTree, is_shattered

DEFAULT_SEARCH_BUDGET = 2 * 10**6


@dataclass(frozen=True)
class DimResult:
    kind: str
    k: int
    value: int
    witness: Any

    def to_dict(self) -> dict:
        if self.kind == "littlestone":
            from .trees import tree_to_dict
            w = tree_to_dict(self.witness) if self.witness is not None else None
        else:
            w = None if self.witness is None else {
                "points": list(self.witness[0]), "ordering": list(self.witness[1])}
        return {"kind": self.kind, "k": self.k, "value": self.value, "witness": w}


def _check_k(C: ConceptClass, k: int):
    if k < 1:
        raise ParameterError("k must be at least 1")
    if k + 1 > C.label_count:
        raise ParameterError(f"k+1={k + 1} exceeds the label count {C.label_count}")


def _label_masks(C: ConceptClass) -> list[list[int]]:
    masks = [[0] * C.label_count for _ in range(C.domain_size)]
    for j, c in enumerate(C.concepts):
        for x, y in enumerate(c):
            masks[x][y] |= 1 << j
    return masks


def littlestone_upper_bound(C: ConceptClass, k: int) -> int:
    """min(floor(log_{k+1} |C|), n): each level multiplies realized paths by k+1."""
    size, d = len(C), 0
    while (k + 1) ** (d + 1) <= size:
        d += 1
    return min(d, C.domain_size)


class _LDSearch:
    def __init__(self, C: ConceptClass, k: int, budget: int):
        self.C, self.k, self.budget = C, k, budget
        self.masks = _label_masks(C)
        self.memo: dict[tuple[int, int], bool] = {}

    def ge(self, V: int, d: int) -> bool:
        """Does the version space ``V`` shatter some tree of depth ``d``?"""
        if d == 0:
            return V != 0
        if V.bit_count() < (self.k + 1) ** d:
            return False
        key = (V, d)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if len(self.memo) >= self.budget:
            raise _Exhausted
        found = False
        for row in self.masks:
            good = 0
            for m in row:
                sub = V & m
                if sub and sub != V and self.ge(sub, d - 1):
                    good += 1
                    if good > self.k:
                        found = True
                        break
            if found:
                break
        self.memo[key] = found
        return found

    def witness(self, V: int, d: int) -> ExplicitTree:
        b = self.k + 1
        pts, labs = {}, {}

        def build(v, mask, depth):
            if depth == 0:
                return
            for x, row in enumerate(self.masks):
                ys = [y for y, m in enumerate(row) if (mask & m) and self.ge(mask & m, depth - 1)]
                if len(ys) >= b:
                    ys = ys[:b]
                    pts[v], labs[v] = x, ys
                    for r, y in enumerate(ys):
                        build(v + (r,), mask & row[y], depth - 1)
                    return
            raise AssertionError("witness construction lost a certified subtree")

        build((), V, d)
        return ExplicitTree(b, d, pts, labs)


class _Exhausted(Exception):
    pass


def littlestone_dim(C: ConceptClass, k: int, budget: int | None = None) -> DimResult:
    """Largest depth of a complete (k+1)-ary mistake tree shattered by ``C``."""
    _check_k(C, k)
    search = _LDSearch(C, k, budget or DEFAULT_SEARCH_BUDGET)
    full = (1 << len(C)) - 1
    best = 0
    for d in range(1, littlestone_upper_bound(C, k) + 1):
        try:
            ok = search.ge(full, d)
        except _Exhausted:
            raise BudgetError(f"k-Littlestone search exceeded {search.budget} states; "
                              f"dimension is at least {best}", lower_bound=best) from None
        if not ok:
            break
        best = d
    return DimResult("littlestone", k, best, search.witness(full, best))


def monotone_patterns(d: int, ordering) -> list[tuple]:
    """All d-point patterns weakly increasing along ``ordering``."""
    return [tuple(ordering[j] for j in idx)
            for idx in itertools.combinations_with_replacement(range(len(ordering)), d)]


def _orderings(label_count: int, k: int):
    for K in itertools.combinations(range(label_count), k + 1):
        yield from itertools.permutations(K)


def _covers(C_rows, points, ordering) -> bool:
    have = {tuple(c[x] for x in points) for c in C_rows}
    return all(p in have for p in monotone_patterns(len(points), ordering))


def monotone_dim(C: ConceptClass, k: int, budget: int | None = None) -> DimResult:
    """Largest d with points x_1<...<x_d and an ordered (k+1)-label set whose
    monotone patterns all appear in the restriction of ``C``.

    Coverage is inherited by sub-tuples, so a depth-first extension over
    increasing tuples with a bound on the remaining points is exact.
    """
    _check_k(C, k)
    n = C.domain_size
    cap = budget or DEFAULT_SEARCH_BUDGET
    rows = C.concepts
    best = [0, None]
    steps = [0]

    def dfs(points, ordering):
        if len(points) > best[0]:
            best[0], best[1] = len(points), (tuple(points), tuple(ordering))
        start = points[-1] + 1 if points else 0
        for x in range(start, n):
            if len(points) + (n - x) <= best[0]:
                return
            steps[0] += 1
            if steps[0] > cap:
                raise BudgetError(f"k-monotone search exceeded {cap} steps; dimension is at "
                                  f"least {best[0]}", lower_bound=best[0])
            cand = points + [x]
            if _covers(rows, cand, ordering):
                dfs(cand, ordering)

    for ordering in _orderings(C.label_count, k):
        if best[0] == n:
            break
        dfs([], ordering)
    return DimResult("monotone", k, best[0], best[1])


def verify_monotone_witness(C: ConceptClass, k: int, result: DimResult) -> bool:
    if result.value == 0:
        return result.witness is None
    points, ordering = result.witness
    return (len(points) == result.value and list(points) == sorted(set(points))
            and len(ordering) == k + 1 and len(set(ordering)) == k + 1
            and _covers(C.concepts, points, ordering))


def verify_littlestone_witness(C: ConceptClass, k: int, result: DimResult) -> bool:
    t = result.witness
    return t.arity == k + 1 and t.depth == result.value and is_shattered(t, C)


# -- oracles ---------------------------------------------------------------------

def _tree_exists(concepts, n, ell, k, depth) -> bool:
    """Exhaustive search over trees: is some depth-``depth`` tree realizable
    on every path, given that ``concepts`` are those consistent with the
    path prefix so far?"""
    if depth == 0:
        return bool(concepts)
    for x in range(n):
        for ys in itertools.combinations(range(ell), k + 1):
            if all(_tree_exists([c for c in concepts if c[x] == y], n, ell, k, depth - 1)
                   for y in ys):
                return True
    return False


def littlestone_dim_oracle(C: ConceptClass, k: int, max_depth: int | None = None) -> int:
    """Ground truth by search over candidate trees; no memo, no pruning."""
    _check_k(C, k)
    cap = C.domain_size if max_depth is None else max_depth
    d = 0
    while d < cap and _tree_exists(list(C.concepts), C.domain_size, C.label_count, k, d + 1):
        d += 1
    if d == cap and cap < C.domain_size and _tree_exists(
            list(C.concepts), C.domain_size, C.label_count, k, cap + 1):
        raise BudgetError(f"k-Littlestone dimension exceeds the oracle cap {cap}", lower_bound=cap)
    return d


def all_trees(n: int, ell: int, b: int, depth: int):
    """Every complete b-ary tree of the given depth over ``[n]`` with edge labels
    drawn as increasing b-subsets of ``[ell]`` (label order never matters)."""
    verts = [v for lvl in range(depth) for v in itertools.product(range(b), repeat=lvl)]
    choices = [(x, ys) for x in range(n) for ys in itertools.combinations(range(ell), b)]
    for assign in itertools.product(choices, repeat=len(verts)):
        pts = {v: a[0] for v, a in zip(verts, assign)}
        labs = {v: a[1] for v, a in zip(verts, assign)}
        yield ExplicitTree(b, depth, pts, labs)


def littlestone_dim_by_trees(C: ConceptClass, k: int, max_depth: int = 2) -> int:
    """Enumerate literal trees and test each with ``is_shattered``; tiny inputs only."""
    d = 0
    for depth in range(1, max_depth + 1):
        if any(is_shattered(t, C) for t in all_trees(C.domain_size, C.label_count, k + 1, depth)):
            d = depth
        else:
            break
    return d


def monotone_dim_oracle(C: ConceptClass, k: int, max_d: int | None = None) -> int:
    """Brute force over point tuples, label sets and orderings, largest d first."""
    _check_k(C, k)
    hi = C.domain_size if max_d is None else min(max_d, C.domain_size)
    for d in range(hi, 0, -1):
        for pts in itertools.combinations(range(C.domain_size), d):
            restricted = {tuple(c[x] for x in pts) for c in C.concepts}
            for K in itertools.combinations(range(C.label_count), k + 1):
                for order in itertools.permutations(K):
                    needed = (tuple(order[i] for i in idx) for idx in
                              itertools.combinations_with_replacement(range(k + 1), d))
                    if all(p in restricted for p in needed):
                        return d
    return 0


def threshold_dim(C: ConceptClass) -> int:
    """Largest d with domain-ordered points x_1<...<x_d, labels a != b and
    concepts c_0..c_d where c_i gives ``a`` to the first i points and ``b``
    to the rest."""
    n, best = C.domain_size, 0
    for a, b in itertools.permutations(range(C.label_count), 2):
        for d in range(n, best, -1):
            hit = False
            for pts in itertools.combinations(range(n), d):
                cuts = set()
                for c in C.concepts:
                    vals = [c[x] for x in pts]
                    i = 0
                    while i < d and vals[i] == a:
                        i += 1
                    if all(v == b for v in vals[i:]):
                        cuts.add(i)
                if len(cuts) == d + 1:
                    hit = True
                    break
            if hit:
                best = d
                break
    return best
