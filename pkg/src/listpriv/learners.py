"""Online k-list learners, loss-profile learners and comparison-based loss tools.

A loss-profile learner stands in for a randomized k-list learner: given a
sample and a test point it returns, for every label y, the probability
that y is missing from the predicted list.  The synthetic learners here
work on path-addressed trees (a vertex is its root path and the edge to
child r carries label r), which is what ``ImplicitTree`` and
``ExplicitTree.path_tree`` provide.
"""
from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import ConceptClass, as_example
from .dims import _LDSearch, _check_k
from .errors import (BudgetError, ExtractionError, ParameterError, ProtocolError,
                     RealizabilityError)
from .ramsey import homogeneous_subset, ramsey_subtree, set_ramsey_threshold, _DEFAULT
from .rng import hash_unit, stream
from .trees import (SubtreeEmbedding, TreeSample, chains, embedded_tree, extend_sample,
                    is_ancestor, is_descendant_or_self, loc)

NORMALIZATION_TOL = 1e-9
DEFAULT_CHECK_BUDGET = 10**6


# -- online learners -------------------------------------------------------------

class OnlineLearner:
    """Predict a k-list, then learn the true label.  ``state_key`` must
    identify everything that influences future predictions."""

    k: int
    label_count: int

    def predict(self, x) -> frozenset:
        raise NotImplementedError

    def update(self, x, y) -> None:
        raise NotImplementedError

    def state_key(self):
        raise NotImplementedError

    def step(self, x, y) -> tuple[frozenset, bool]:
        pred = self.predict(x)
        if len(pred) != self.k:
            raise ProtocolError(f"learner emitted {len(pred)} labels, expected {self.k}")
        self.update(x, y)
        return pred, y not in pred

    def clone(self) -> "OnlineLearner":
        return copy.copy(self)


class MonotoneOnlineLearner(OnlineLearner):
    """At most one mistake on sequences realizable by a monotone function
    with labels ``0..k``.

    The opening list omits only the middle label ``k // 2``.  A mistake can
    only reveal that label, and once it is seen at some point every smaller
    point takes a label up to the middle one and every larger point a label
    from it upward, so the two lists ``0..k-1`` and ``1..k`` cover the rest.
    """

    def __init__(self, k: int):
        if k < 2:
            raise ParameterError("the monotone strategy needs k >= 2")
        self.k = k
        self.label_count = k + 1
        self.mid = k // 2
        self.pivot = None

    def predict(self, x) -> frozenset:
        if self.pivot is None:
            return frozenset(y for y in range(self.k + 1) if y != self.mid)
        if x <= self.pivot:
            return frozenset(range(self.k))
        return frozenset(range(1, self.k + 1))

    def update(self, x, y) -> None:
        if not (isinstance(y, int) and 0 <= y <= self.k):
            raise ProtocolError(f"feedback label {y!r} outside 0..{self.k}")
        if self.pivot is None and y == self.mid:
            self.pivot = x

    def state_key(self):
        return self.pivot


class SOAListLearner(OnlineLearner):
    """Predict the k labels whose restricted version spaces have the largest
    k-Littlestone dimension; ties go to the lower label, and a label with
    no consistent concept ranks below every other."""

    def __init__(self, C: ConceptClass, k: int):
        _check_k(C, k)
        self.C, self.k, self.label_count = C, k, C.label_count
        self._search = _LDSearch(C, k, 10**7)
        self.version = (1 << len(C)) - 1

    def _ld(self, mask: int) -> int:
        if mask == 0:
            return -1
        d = 0
        while self._search.ge(mask, d + 1):
            d += 1
        return d

    def predict(self, x) -> frozenset:
        if not 0 <= x < self.C.domain_size:
            raise ProtocolError(f"point {x} outside the class domain")
        row = self._search.masks[x]
        scores = [(-self._ld(self.version & row[y]), y) for y in range(self.label_count)]
        scores.sort()
        return frozenset(y for _, y in scores[: self.k])

    def update(self, x, y) -> None:
        if not (isinstance(y, int) and 0 <= y < self.label_count):
            raise ProtocolError(f"feedback label {y!r} outside the label space")
        nxt = self.version & self._search.masks[x][y]
        if nxt == 0:
            raise RealizabilityError(f"no concept is consistent with ({x}, {y}) and the history")
        self.version = nxt

    def state_key(self):
        return self.version


def monotone_online_learner(k: int) -> MonotoneOnlineLearner:
    return MonotoneOnlineLearner(k)


def soa_list_learner(C: ConceptClass, k: int) -> SOAListLearner:
    return SOAListLearner(C, k)


def run_online(learner: OnlineLearner, sequence) -> list[tuple]:
    """Feed ``(point, label)`` pairs; returns ``(point, list, label, miss)`` rows."""
    log = []
    for ex in sequence:
        ex = as_example(ex)
        pred, miss = learner.step(ex.point, ex.label)
        log.append((ex.point, tuple(sorted(pred)), ex.label, int(miss)))
    return log


def adversary_max_mistakes(learner: OnlineLearner, C: ConceptClass, length: int,
                           points: Sequence[int] | None = None) -> int:
    """Largest mistake count over every C-realizable sequence of at most
    ``length`` examples, by exhaustive game search memoized on
    (learner state, version space, remaining length)."""
    pts = list(range(C.domain_size)) if points is None else list(points)
    masks = [[0] * C.label_count for _ in range(C.domain_size)]
    for j, c in enumerate(C.concepts):
        for x, y in enumerate(c):
            masks[x][y] |= 1 << j
    memo: dict = {}

    def value(lrn, V, left):
        if left == 0:
            return 0
        key = (lrn.state_key(), V, left)
        if key in memo:
            return memo[key]
        best = 0
        for x in pts:
            pred = lrn.predict(x)
            for y in range(C.label_count):
                nxt = V & masks[x][y]
                if not nxt:
                    continue
                child = lrn.clone()
                child.update(x, y)
                best = max(best, int(y not in pred) + value(child, nxt, left - 1))
        memo[key] = best
        return best

    return value(learner.clone(), (1 << len(C)) - 1, length)


# -- loss profiles ---------------------------------------------------------------

class LossProfileLearner:
    """A randomized k-list learner described by its miss probabilities.

    ``profile(sample, x)[y]`` is the probability that label ``y`` is absent
    from the list predicted at ``x`` after training on ``sample`` (a tuple
    of ``(point, label)`` pairs sorted along the branch).
    """

    k: int
    label_count: int

    def profile(self, sample: tuple, x) -> np.ndarray:
        raise NotImplementedError

    def miss(self, sample: tuple, x, y) -> float:
        return float(checked_profile(self, sample, x)[y])

    def miss_along_branch(self, sample: tuple, edges: Sequence[int]) -> np.ndarray:
        """Miss probability of the true label at every depth of a branch."""
        out = np.empty(len(edges))
        for j in range(len(edges)):
            out[j] = checked_profile(self, sample, tuple(edges[:j]))[edges[j]]
        return out


def checked_profile(L: LossProfileLearner, sample, x) -> np.ndarray:
    p = np.asarray(L.profile(tuple(sample), x), dtype=float)
    if p.shape != (L.label_count,):
        raise ProtocolError(f"profile has shape {p.shape}, expected ({L.label_count},)")
    if np.any(p < -NORMALIZATION_TOL) or np.any(p > 1 + NORMALIZATION_TOL):
        raise ProtocolError("profile entries must lie in [0, 1]")
    total = float(np.sum(1.0 - p))
    if abs(total - L.k) > NORMALIZATION_TOL:
        raise ProtocolError(f"sum of hit probabilities is {total}, expected {L.k}")
    return p


def _path_context(sample, x):
    """(loc, label of x in the extended sample, extended label sequence,
    whether x lies at or above the last sample point) for path vertices."""
    x = tuple(x)
    pts = [tuple(p) for p, _ in sample]
    labels = [y for _, y in sample]
    i = sum(1 for p in pts if is_ancestor(p, x))
    if x in pts:
        j = pts.index(x)
        return j, labels[j], tuple(labels), True
    if i < len(pts):
        y = pts[i][len(x)]
        above = True
    else:
        y = 0
        above = False
    return i, y, tuple(labels[:i] + [y] + labels[i:]), above


class PerfectBranchLearner(LossProfileLearner):
    """Knows the sample's branch down to its last point and nothing below.

    At or above the last sample point it always lists the branch label and
    always drops the cyclically next one; below it (or off the branch) it
    lists a uniformly random k-subset.
    """

    def __init__(self, k: int):
        self.k, self.label_count = k, k + 1

    def _true_label(self, sample, x):
        if not sample:
            return None
        last, y_last = tuple(sample[-1][0]), sample[-1][1]
        x = tuple(x)
        if x == last:
            return y_last
        if is_ancestor(x, last):
            return last[len(x)]
        return None

    def profile(self, sample, x):
        p = np.full(self.label_count, 1.0 / self.label_count)
        b = self._true_label(sample, x)
        if b is not None:
            p[:] = 0.0
            p[(b + 1) % self.label_count] = 1.0
        return p

    def miss_along_branch(self, sample, edges):
        out = np.full(len(edges), 1.0 / self.label_count)
        if sample:
            depth_last = len(sample[-1][0])
            if tuple(edges[:depth_last]) == tuple(sample[-1][0]) and edges[depth_last] == sample[-1][1]:
                out[: depth_last + 1] = 0.0
            else:
                for j in range(min(depth_last + 1, len(edges))):
                    out[j] = checked_profile(self, sample, tuple(edges[:j]))[edges[j]]
        return out


class UniformListLearner(LossProfileLearner):
    """Outputs a uniformly random k-subset of the labels everywhere."""

    def __init__(self, k: int, label_count: int | None = None):
        self.k = k
        self.label_count = label_count or k + 1
        if self.k >= self.label_count:
            raise ParameterError("k must be smaller than the label count")

    def profile(self, sample, x):
        return np.full(self.label_count, 1.0 - self.k / self.label_count)

    def miss_along_branch(self, sample, edges):
        return np.full(len(edges), 1.0 - self.k / self.label_count)


def _default_cell_value(labels: tuple, i: int) -> float:
    return (hash_unit(17, labels, i) % 9) / 8


class TypeLocLearner(LossProfileLearner):
    """Misses the correct label with probability ``fn(labels, loc)`` and
    spreads the remaining hit mass evenly, so its loss factors exactly
    through the extended label sequence and the location."""

    def __init__(self, k: int, fn: Callable[[tuple, int], float] | None = None):
        self.k, self.label_count = k, k + 1
        self.fn = fn or _default_cell_value

    def _miss_value(self, sample, x) -> tuple[float, int]:
        i, y, labels, _ = _path_context(sample, x)
        return self.fn(labels, i), y

    def profile(self, sample, x):
        q, y = self._miss_value(sample, x)
        p = np.full(self.label_count, (1.0 - q) / self.k)
        p[y] = q
        return p


class DepthReadingLearner(TypeLocLearner):
    """Like ``TypeLocLearner`` but the miss probability depends on the
    absolute depth of the test point."""

    def __init__(self, k: int, fn: Callable[[int], float] | None = None):
        super().__init__(k)
        self.depth_fn = fn or (lambda depth: 0.9 if depth % 2 == 0 else 0.1)

    def _miss_value(self, sample, x):
        _, y, _, _ = _path_context(sample, x)
        return self.depth_fn(len(tuple(x))), y


class MonteCarloLearner(LossProfileLearner):
    """Estimates the profile of a sampled learner by repeated draws.

    ``sampler(sample, x, rng)`` returns one k-list.  Each estimate is
    within ``hoeffding_width(beta)`` of the truth with probability 1-beta.
    """

    def __init__(self, sampler, k: int, label_count: int, draws: int = 2000, seed: int = 0):
        self.sampler, self.k, self.label_count = sampler, k, label_count
        self.draws, self.seed = draws, seed

    def hoeffding_width(self, beta: float = 0.05) -> float:
        return math.sqrt(math.log(2 / beta) / (2 * self.draws))

    def profile(self, sample, x):
        rng = stream(self.seed, hash_unit(self.seed, tuple(sample), x) >> 1)
        hits = np.zeros(self.label_count)
        for _ in range(self.draws):
            pred = set(self.sampler(sample, x, rng))
            if len(pred) != self.k:
                raise ProtocolError("sampled list has the wrong size")
            for y in pred:
                hits[y] += 1
        return 1.0 - hits / self.draws


# -- comparison-based loss on trees ------------------------------------------------

@dataclass
class CBCheck:
    """Outcome of a comparison-based check.

    ``table`` maps cells to the midpoint of the observed range when the
    check passes; ``counterexample`` holds the two inputs spanning the worst
    cell when it fails.
    """

    ok: bool
    gamma: float
    table: dict
    spread: float
    counterexample: tuple | None = None


def _child_positions(tree, S: TreeSample) -> tuple:
    return tuple(tree.labels(v).index(y) for v, y in zip(S.vertices, S.labels))


def tree_samples(tree, m: int):
    """Every T-realizable sample of size m (vertices on a chain plus labels)."""
    internal = list(tree.internal_vertices())
    for ch in chains(internal, m):
        fixed = tuple(tree.labels(u)[v[len(u)]] for u, v in zip(ch, ch[1:]))
        lasts = tree.labels(ch[-1]) if ch else [None]
        for y in lasts:
            labels = fixed + ((y,) if ch else ())
            yield TreeSample(tree, ch, labels)


def compatible_points(tree, S: TreeSample):
    if not S.vertices:
        yield from tree.internal_vertices()
        return
    last = S.vertices[-1]
    for j in range(len(last)):
        v = last[:j]
        if v not in S.vertices:
            yield v
    below = S.continuation()
    for v in tree.internal_vertices():
        if is_descendant_or_self(v, below):
            yield v


def cb_cells(L: LossProfileLearner, tree, m: int, budget: int = DEFAULT_CHECK_BUDGET):
    """Yield ``(cell, value, (S, x))`` over all realizable S and compatible x."""
    count = 0
    for S in tree_samples(tree, m):
        ex = S.examples
        for x in compatible_points(tree, S):
            count += 1
            if count > budget:
                raise BudgetError(f"more than {budget} (sample, point) pairs to check")
            ext = extend_sample(S, x)
            i = loc(S, x)
            y = ext.labels[i]
            cell = (_child_positions(tree, ext), i)
            yield cell, float(checked_profile(L, ex, tree.point(x))[y]), (S, x)


def _summarize(items, gamma: float) -> CBCheck:
    lo: dict = {}
    hi: dict = {}
    for cell, val, witness in items:
        if cell not in lo or val < lo[cell][0]:
            lo[cell] = (val, witness)
        if cell not in hi or val > hi[cell][0]:
            hi[cell] = (val, witness)
    spread, worst = 0.0, None
    for cell in lo:
        s = hi[cell][0] - lo[cell][0]
        if s > spread:
            spread, worst = s, cell
    if spread <= 2 * gamma + 1e-12:
        table = {cell: (lo[cell][0] + hi[cell][0]) / 2 for cell in lo}
        return CBCheck(True, gamma, table, spread)
    return CBCheck(False, gamma, {}, spread, (worst, lo[worst], hi[worst]))


def check_cb_loss(L: LossProfileLearner, tree, m: int, gamma: float,
                  budget: int = DEFAULT_CHECK_BUDGET) -> CBCheck:
    """Does L's loss depend, up to gamma, only on (type of S+x, loc of x)?"""
    if m < 0:
        raise ParameterError("sample size must be nonnegative")
    return _summarize(cb_cells(L, tree, m, budget), gamma)


def _round_to_grid(value: float, denom: int) -> int:
    """Index of the closest multiple of 1/denom, ties to the smaller one."""
    return max(0, min(denom, math.ceil(value * denom - 0.5 - 1e-12)))


def cb_chain_coloring(L: LossProfileLearner, host, m: int, denom: int):
    """Color (m+2)-chains by the rounded losses of leave-one-out samples."""
    base = denom + 1

    def color(chain):
        verts = chain[: m + 1]
        labels = tuple(host.labels(u)[v[len(u)]] for u, v in zip(chain, chain[1:]))
        code = 0
        for i in range(m + 1):
            rest = verts[:i] + verts[i + 1:]
            S = TreeSample(host, rest, labels[:i] + labels[i + 1:])
            ext = extend_sample(S, verts[i])
            y = ext.labels[i]
            a = checked_profile(L, S.examples, host.point(verts[i]))[y]
            code = code * base + _round_to_grid(float(a), denom)
        return code

    return color, base ** (m + 1)


def extract_cb_subtree(L: LossProfileLearner, host, m: int, depth: int | None = None,
                       granularity: Fraction | None = None, cap=_DEFAULT,
                       budget: int = 2 * 10**6) -> tuple[SubtreeEmbedding, dict]:
    """A subtree on which L has comparison-based loss at the rounding step.

    The losses are rounded to multiples of ``granularity`` (default
    1/(100m)), which colors (m+2)-chains; a type-monochromatic subtree of
    that coloring keeps every loss within half a step of its cell value.
    """
    if m < 1:
        raise ParameterError("sample size m must be at least 1")
    step = Fraction(granularity) if granularity is not None else Fraction(1, 100 * m)
    if step <= 0 or step > 1 or (1 / step).denominator != 1:
        raise ParameterError("granularity must be 1/N for a positive integer N")
    denom = int(1 / step)
    d = m + 1 if depth is None else depth
    half = float(step) / 2
    if host.depth is not None and host.depth >= d and _materializable(host):
        if check_cb_loss(L, host, m, half).ok:
            emb = SubtreeEmbedding.identity(host.arity, host.depth)
            return emb, {"identity": True, "colors": None, "step": str(step)}
    color, colors = cb_chain_coloring(L, host, m, denom)
    emb, report = ramsey_subtree(host, color, d, m + 2, colors, cap=cap, budget=budget)
    sub = embedded_tree(host, emb)
    if not check_cb_loss(L, sub, m, half).ok:
        raise ExtractionError("extracted subtree failed the comparison-based check")
    report = dict(report, identity=False, colors=colors, step=str(step))
    return emb, report


def _materializable(tree) -> bool:
    return tree.arity ** (tree.depth + 1) <= 10**5


# -- comparison-based behaviour on ordered sets --------------------------------------

def balanced_labels(m: int, ell: int) -> tuple:
    if m % ell:
        raise ParameterError(f"balanced samples need the label count {ell} to divide m={m}")
    t = m // ell
    return tuple(y for y in range(ell) for _ in range(t))


def set_cells(L: LossProfileLearner, X: Sequence[int], m: int, budget: int = DEFAULT_CHECK_BUDGET):
    labels = balanced_labels(m, L.label_count)
    X = sorted(X)
    count = 0
    for pts in itertools.combinations(X, m):
        sample = tuple(zip(pts, labels))
        chosen = set(pts)
        for x in X:
            if x in chosen:
                continue
            count += 1
            if count > budget:
                raise BudgetError(f"more than {budget} (sample, point) pairs to check")
            i = sum(1 for p in pts if p < x)
            yield i, checked_profile(L, sample, x), (sample, x)


def check_balanced_cb(L: LossProfileLearner, X: Sequence[int], m: int, gamma: float,
                      budget: int = DEFAULT_CHECK_BUDGET) -> CBCheck:
    """Is L's miss vector, up to gamma in sup norm, a function of loc only?

    Test points range over X minus the sample points.
    """
    lo: dict = {}
    hi: dict = {}
    wit_lo: dict = {}
    wit_hi: dict = {}
    for i, vec, witness in set_cells(L, X, m, budget):
        if i not in lo:
            lo[i], hi[i] = vec.copy(), vec.copy()
            wit_lo[i] = [witness] * len(vec)
            wit_hi[i] = [witness] * len(vec)
            continue
        for j, v in enumerate(vec):
            if v < lo[i][j]:
                lo[i][j], wit_lo[i][j] = v, witness
            if v > hi[i][j]:
                hi[i][j], wit_hi[i][j] = v, witness
    spread, worst = 0.0, None
    for i in lo:
        j = int(np.argmax(hi[i] - lo[i]))
        s = float(hi[i][j] - lo[i][j])
        if s > spread:
            spread, worst = s, (i, j)
    if spread <= 2 * gamma + 1e-12:
        table = {i: tuple((lo[i] + hi[i]) / 2) for i in sorted(lo)}
        return CBCheck(True, gamma, table, spread)
    i, j = worst
    return CBCheck(False, gamma, {}, spread,
                   ((i, j), (float(lo[i][j]), wit_lo[i][j]), (float(hi[i][j]), wit_hi[i][j])))


MAX_SET_COLORS = 10**4


def extract_cb_subset(L: LossProfileLearner, X: Sequence[int], m: int,
                      granularity: Fraction | None = None,
                      max_colors: int = MAX_SET_COLORS) -> tuple[int, ...]:
    """A largest subset of X on which L is comparison based at the rounding step.

    Colors (m+1)-subsets by the rounded miss vectors of their leave-one-out
    balanced samples and returns a largest homogeneous subset.
    """
    if m < 1:
        raise ParameterError("sample size m must be at least 1")
    ell = L.label_count
    balanced_labels(m, ell)
    step = Fraction(granularity) if granularity is not None else Fraction(1, 100 * L.k * m)
    if step <= 0 or step > 1 or (1 / step).denominator != 1:
        raise ParameterError("granularity must be 1/N for a positive integer N")
    denom = int(1 / step)
    q = (denom + 1) ** (ell * (m + 1))
    X = tuple(sorted(X))
    if q > max_colors:
        raise BudgetError(f"{q} colors exceed the budget of {max_colors}; the classical bound "
                          f"asks for a universe of size {set_ramsey_threshold(m + 1, m + 2, q)}",
                          colors=q)
    half = float(step) / 2
    if check_balanced_cb(L, X, m, half).ok:
        return X
    labels = balanced_labels(m, ell)

    def color(idx):
        pts = [X[i] for i in idx]
        code = 0
        for i in range(m + 1):
            rest = pts[:i] + pts[i + 1:]
            vec = checked_profile(L, tuple(zip(rest, labels)), pts[i])
            for v in vec:
                code = code * (denom + 1) + _round_to_grid(float(v), denom)
        return code

    for s in range(len(X), m, -1):
        found = homogeneous_subset(len(X), m + 1, color, s)
        if found is not None:
            sub = tuple(X[i] for i in found)
            if not check_balanced_cb(L, sub, m, half).ok:
                raise ExtractionError("homogeneous subset failed the comparison-based check")
            return sub
    return X[:m]


class LocationLearner(LossProfileLearner):
    """On ordered domains: the miss vector depends only on the location of x.

    The default table is exact for monotone targets on balanced samples:
    it drops a label outside the range allowed between the neighbours of x.
    """

    def __init__(self, k: int, m: int | None = None, table: Callable[[int], Sequence[float]] | None = None):
        self.k, self.label_count = k, k + 1
        if table is None:
            if m is None:
                raise ParameterError("the default table needs the sample size m")
            labels = balanced_labels(m, self.label_count)
            table = lambda i: self._monotone_row(labels, i)
        self.table = table

    def _monotone_row(self, labels, i):
        left = labels[i - 1] if i > 0 else 0
        right = labels[i] if i < len(labels) else self.k
        drop = self.k if right < self.k else (0 if left > 0 else self.k)
        p = np.zeros(self.label_count)
        p[drop] = 1.0
        return p

    def profile(self, sample, x):
        i = sum(1 for p, _ in sample if p < x)
        return np.asarray(self.table(i), dtype=float)


class PositionLearner(LossProfileLearner):
    """On ordered domains: the miss vector reads the absolute value of x."""

    def __init__(self, k: int, fn: Callable[[int, int], Sequence[float]] | None = None):
        self.k, self.label_count = k, k + 1
        self.fn = fn or (lambda i, x: np.eye(self.label_count)[x % self.label_count])

    def profile(self, sample, x):
        i = sum(1 for p, _ in sample if p < x)
        return np.asarray(self.fn(i, x), dtype=float)
