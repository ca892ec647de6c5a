"""Ramsey machinery on b-ary trees and on finite sets, plus tower arithmetic.

Chain colorings are callables taking a depth-sorted tuple of host vertex
paths and returning an integer color in ``0..c-1``.  Hosts are never
materialized: the constructions visit vertices on demand and cache what
they touch.
"""
from __future__ import annotations

import itertools
import math
import os
from collections import deque
from typing import Callable, Hashable, Mapping

from .errors import BudgetError, ConstructionError, GateError, ParameterError, PreconditionError
from .rng import hash_unit
from .trees import SubtreeEmbedding, chain_type, chains, iter_paths

MAX_TOWER_BITS = 1 << 24
DEFAULT_GATE_CAP = 1 << 64
MATERIALIZE_LIMIT = 1 << 15
DEFAULT_SEARCH_BUDGET = 2 * 10**6

ChainColoring = Callable[[tuple], int]
_MASK64 = (1 << 64) - 1


# -- tower arithmetic --------------------------------------------------------------

def tower(t: int, x: int, max_bits: int = MAX_TOWER_BITS) -> int:
    """twr_1(x) = x and twr_t(x) = 2 ** twr_{t-1}(x)."""
    if t < 1:
        raise ParameterError("tower height must be at least 1")
    value = int(x)
    for _ in range(t - 1):
        if value > max_bits:
            raise BudgetError(f"tower value needs more than {max_bits} bits")
        value = 1 << value
    return value


def log_iter(t: int, x) -> float:
    """log_0(x) = x and log_t(x) = log2(log_{t-1}(x))."""
    value = x
    for _ in range(t):
        if value <= 0:
            raise ParameterError("iterated logarithm left the positive reals")
        value = math.log2(value)
    return value


def log_star(x) -> int:
    if x <= 0:
        raise ParameterError("log-star needs x > 0")
    t, value = 0, x
    while value > 1:
        value = math.log2(value)
        t += 1
    return t


def required_depth(d: int, m: int, c: int, b: int, max_bits: int = MAX_TOWER_BITS) -> int:
    """Host depth sufficient for a type-monochromatic depth-d subtree.

    For m = 1 this is the pigeonhole depth d*c.  For m >= 2 it is
    twr_m(A * log2 c) with A = 5 b^(m-2) d c^(b^(m-1)); since
    2 ** (A log2 c) = c ** A the value is the exact integer twr_{m-1}(c ** A).
    """
    if min(d, c, b, m) < 1 or b < 2:
        raise ParameterError("need d, c, m >= 1 and b >= 2")
    if m == 1:
        return d * c
    if c < 2:
        raise ParameterError("need at least 2 colors for m >= 2")
    if d < m:
        raise ParameterError(f"the bound is stated for d >= m (got d={d}, m={m})")
    if b ** (m - 1) * math.log2(c) > max_bits:
        raise BudgetError("color exponent exceeds the big-integer budget")
    A = 5 * b ** (m - 2) * d * c ** (b ** (m - 1))
    if A * math.log2(c) > max_bits:
        raise BudgetError(f"required depth needs more than {max_bits} bits")
    return tower(m - 1, c**A, max_bits)


def _bound_exceeds(d, m, c, b, cap) -> tuple[bool, int | None]:
    try:
        need = required_depth(max(d, m), m, c, b)
    except BudgetError:
        return True, None
    return need > cap, need


def gate_cap() -> int | None:
    raw = os.environ.get("LISTPRIV_RAMSEY_CAP")
    if raw is None:
        return DEFAULT_GATE_CAP
    return None if raw.strip().lower() in ("none", "off", "") else int(raw)


_DEFAULT = object()


# -- pigeonhole --------------------------------------------------------------------

def _php_exact(arity: int, depth: int, color: Callable[[tuple], Hashable], d: int):
    """Exact monochromatic-subtree search on a materializable tree of path positions.

    ``best[j][v]`` is the largest depth of a j-colored subtree rooted at v.
    Colors are tried in ascending order and roots in breadth-first order.
    """
    verts = list(iter_paths(arity, depth))
    col = {v: color(v) for v in verts}
    palette = sorted(set(col.values()))
    NEG = -1
    best = {j: {} for j in palette}
    below = {j: {} for j in palette}  # max of best over descendants-or-self
    for v in reversed(verts):
        for j in palette:
            if col[v] == j:
                if len(v) == depth:
                    f = 0
                else:
                    f = 1 + min(below[j][v + (r,)] for r in range(arity))
            else:
                f = NEG
            best[j][v] = f
            sub = f
            if len(v) < depth:
                sub = max([f] + [below[j][v + (r,)] for r in range(arity)])
            below[j][v] = sub

    def first_root(j, start, need):
        queue = deque([start])
        while queue:
            w = queue.popleft()
            if best[j][w] >= need:
                return w
            if len(w) < depth and below[j][w] >= need:
                queue.extend(w + (r,) for r in range(arity))
        return None

    for j in palette:
        root = first_root(j, (), d)
        if root is None:
            continue
        image = {}

        def build(pos, v, e):
            image[pos] = v
            if e == 0:
                return
            for r in range(arity):
                build(pos + (r,), first_root(j, v + (r,), e - 1), e - 1)

        build((), root, d)
        return SubtreeEmbedding(arity, d, image), j
    return None, None


def pigeonhole_subtree(t, coloring, d: int, colors: int | None = None) -> SubtreeEmbedding:
    """A complete subtree of depth ``d`` whose vertices all share one color.

    ``coloring`` maps vertex paths (leaves included) to colors, as a mapping
    or a callable.  The host must have depth at least ``d * colors``.
    """
    color = coloring.__getitem__ if isinstance(coloring, Mapping) else coloring
    if t.depth is None:
        raise PreconditionError("pigeonhole search needs a finite tree")
    if colors is None:
        colors = len({color(v) for v in iter_paths(t.arity, t.depth)})
    if d < 0:
        raise ParameterError("subtree depth must be nonnegative")
    if t.depth < d * colors:
        raise PreconditionError(f"tree depth {t.depth} is below d*colors = {d * colors}")
    emb, _ = _php_exact(t.arity, t.depth, color, d)
    if emb is None:
        raise ConstructionError("no monochromatic subtree found despite sufficient depth")
    return emb


# -- lazy levels of the tree construction ----------------------------------------

class _Host:
    """Level 0: the host tree with the original coloring."""

    def __init__(self, tree, coloring: ChainColoring, c: int):
        self.arity, self.depth = tree.arity, tree.depth
        self.coloring, self.colors = coloring, c
        self._memo: dict[tuple, int] = {}

    def color(self, chain: tuple) -> int:
        hit = self._memo.get(chain)
        if hit is None:
            hit = self._memo[chain] = self.coloring(chain)
        return hit

    def to_host(self, v: tuple) -> tuple:
        return v


class _StarLevel:
    """The tree of representatives built from a parent level for m-chain colorings.

    Representative ``u(sigma)`` is a parent vertex.  For short ``sigma`` it
    is the parent vertex with the same path.  Deeper ones are found by a
    breadth-first scan below the r-th child of ``u(tau)``; a candidate must
    agree, for every earlier representative ``u(rho)`` on its path, with the
    class fixed by the first representative chosen in that direction.
    Every representative below ``u(rho)`` in direction r then has the same
    colors against ``u(rho)`` and its ancestors, which is what makes the
    derived (m-1)-chain coloring well defined.
    """

    def __init__(self, parent, m: int, depth: int | None, search_budget: int):
        self.parent, self.m = parent, m
        self.arity = parent.arity
        self.depth = depth
        self.colors = parent.colors ** parent.arity
        self.budget = search_budget
        self._u: dict[tuple, tuple] = {}
        self._class: dict[tuple, tuple] = {}

    def u(self, sigma: tuple) -> tuple:
        hit = self._u.get(sigma)
        if hit is not None:
            return hit
        if self.depth is not None and len(sigma) > self.depth:
            raise ConstructionError("position below the representative tree")
        if len(sigma) <= self.m - 2:
            if self.parent.depth is not None and len(sigma) > self.parent.depth:
                raise ConstructionError("host too shallow for the fixed top levels")
            v = sigma
        else:
            v = self._search(sigma)
        self._u[sigma] = v
        return v

    def _anchor(self, rho: tuple) -> tuple:
        cached = self._class.get(rho)
        if cached is None:
            top = [self.u(rho[:j]) for j in range(len(rho))]
            cached = (list(itertools.combinations(top, self.m - 2)), self.u(rho))
            self._class[rho] = cached
        return cached

    def _class_of(self, rho: tuple, x: tuple) -> tuple:
        subsets, here = self._anchor(rho)
        return tuple(self.parent.color(A + (here, x)) for A in subsets)

    def _search(self, sigma: tuple) -> tuple:
        tau, r = sigma[:-1], sigma[-1]
        start = self.u(tau) + (r,)
        targets = []
        for j in range(self.m - 2, len(tau)):
            rho = tau[:j]
            first = self.u(rho + (tau[j],))
            targets.append((rho, self._class_of(rho, first)))
        limit = None
        if self.parent.depth is not None:
            room = 0 if self.depth is None else self.depth - len(sigma)
            limit = self.parent.depth - room
            if len(start) > limit:
                raise ConstructionError("host too shallow to continue the representative tree")
        queue, seen = deque([start]), 0
        while queue:
            x = queue.popleft()
            seen += 1
            if seen > self.budget:
                raise BudgetError(f"representative search exceeded {self.budget} vertices")
            if all(self._class_of(rho, x) == want for rho, want in targets):
                return x
            if limit is None or len(x) < limit:
                queue.extend(x + (q,) for q in range(self.arity))
        raise ConstructionError("host exhausted while searching for a representative")

    def color(self, chain: tuple) -> int:
        last = chain[-1]
        if self.depth is not None and len(last) == self.depth:
            return 0
        base = [self.u(p) for p in chain]
        code = 0
        for r in reversed(range(self.arity)):
            code = code * self.parent.colors + self.parent.color(
                tuple(base) + (self.u(last + (r,)),))
        return code

    def to_host(self, v: tuple) -> tuple:
        return self.parent.to_host(self.u(v))


def _php_windowed(level, d: int, budget: int) -> SubtreeEmbedding:
    """Exact pigeonhole search on ever deeper top windows of a lazy level.

    A window of depth d*c always suffices; real colorings usually need far
    less, so windows grow one level at a time until a subtree appears or
    the window would exceed the materialization limit.
    """
    b = level.arity
    memo: dict[tuple, int] = {}

    def vcolor(v):
        hit = memo.get(v)
        if hit is None:
            if len(memo) >= budget:
                raise BudgetError(f"pigeonhole search exceeded {budget} colored vertices")
            hit = memo[v] = level.color((v,))
        return hit

    w = d
    while b ** (w + 1) <= MATERIALIZE_LIMIT and (level.depth is None or w <= level.depth):
        emb, _ = _php_exact(b, w, vcolor, d)
        if emb is not None:
            return emb
        w += 1
    raise BudgetError(f"no monochromatic subtree within the top {w - 1} levels of a lazy level")


def _solve(level, m: int, d: int, budget: int) -> SubtreeEmbedding:
    if m == 1:
        if level.depth is not None and (level.arity ** (level.depth + 1)) <= MATERIALIZE_LIMIT:
            emb, _ = _php_exact(level.arity, level.depth, lambda v: level.color((v,)), d)
            if emb is None:
                raise ConstructionError("level too shallow for a monochromatic subtree")
            return emb
        return _php_windowed(level, d, budget)
    colors_next = level.colors ** level.arity
    if m == 2:
        star_depth = d * colors_next
    else:
        too_big, need = _bound_exceeds(d, m - 1, colors_next, level.arity, DEFAULT_GATE_CAP)
        star_depth = None if too_big else need
    star = _StarLevel(level, m, star_depth, budget)
    inner = _solve(star, m - 1, d, budget)
    return SubtreeEmbedding(level.arity, d, {p: star.u(v) for p, v in inner.image.items()})


def ramsey_subtree(t, coloring: ChainColoring, d: int, m: int, colors: int,
                   cap=_DEFAULT, budget: int = DEFAULT_SEARCH_BUDGET) -> tuple[SubtreeEmbedding, dict]:
    """A depth-d subtree of ``t`` on which equal-type m-chains get equal colors.

    Returns the embedding and a report with the theoretical bound, the gate
    cap and the host depth actually consumed.  ``cap=None`` disables the
    gate; the default cap comes from ``LISTPRIV_RAMSEY_CAP`` or 2**64.
    """
    if m < 1 or d < 0:
        raise ParameterError("need m >= 1 and d >= 0")
    if colors < 1:
        raise ParameterError("need at least one color")
    cap = gate_cap() if cap is _DEFAULT else cap
    b = t.arity
    if m == 1:
        need = d * colors
    elif colors == 1:
        need = d
    else:
        too_big, need = _bound_exceeds(d, m, colors, b, math.inf if cap is None else cap)
        if too_big and cap is not None:
            shown = f"{need}" if need is not None else "(too large to evaluate)"
            raise GateError(f"required host depth {shown} exceeds the cap {cap}",
                            required_depth=need, cap=cap)
    if t.depth is not None and need is not None and t.depth < need:
        raise PreconditionError(f"host depth {t.depth} is below the required depth {need}")
    if t.depth is not None and need is None:
        raise PreconditionError("host depth is below the (astronomical) required depth")
    if colors == 1:
        emb = SubtreeEmbedding.identity(b, d)
    elif m == 1:
        if t.depth is not None and b ** (t.depth + 1) <= MATERIALIZE_LIMIT:
            emb = pigeonhole_subtree(t, lambda v: coloring((v,)), d, colors)
        else:
            emb = _solve(_Host(t, coloring, colors), 1, d, budget)
    else:
        emb = _solve(_Host(t, coloring, colors), m, d, budget)
    consumed = max(len(v) for v in emb.image.values())
    report = {"required_depth": need, "cap": cap, "consumed_depth": consumed}
    return emb, report


def verify_type_monochromatic(emb: SubtreeEmbedding, coloring: ChainColoring, m: int) -> bool:
    """Independent check: equal-type m-chains of the embedded subtree share a color."""
    seen: dict[tuple, int] = {}
    for ch in chains(list(emb.positions()), m):
        col = coloring(tuple(emb.image[p] for p in ch))
        key = chain_type(ch)
        if seen.setdefault(key, col) != col:
            return False
    return len(set(seen.values())) <= emb.arity ** (m - 1)


def random_chain_coloring(seed: int, colors: int) -> ChainColoring:
    """A deterministic pseudo-random coloring of chains of an unbounded tree."""
    salt = hash_unit(seed, "chain-coloring")

    def color(chain):
        # tuples of int tuples hash deterministically; splitmix64 finalizer mixes
        z = (hash(tuple(chain)) ^ salt) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) % colors
    return color


# -- classical Ramsey on sets ----------------------------------------------------

def homogeneous_subset(N: int, t: int, coloring: Callable[[tuple], int], s: int,
                       budget: int = DEFAULT_SEARCH_BUDGET) -> tuple[int, ...] | None:
    """Lexicographically first s-subset of ``0..N-1`` whose t-subsets share a color.

    Returns None when no such subset exists.
    """
    if s > N:
        raise PreconditionError(f"target size {s} exceeds the universe size {N}")
    if t < 1 or s < 0:
        raise ParameterError("need t >= 1 and s >= 0")
    if t >= 3 and math.comb(N, t) > 10**6:
        raise BudgetError(f"C({N},{t}) exceeds the exhaustive-search limit of 10^6")
    if s < t:
        return tuple(range(s))
    steps = [0]

    def dfs(chosen, nxt, want):
        if len(chosen) == s:
            return tuple(chosen)
        for x in range(nxt, N - (s - len(chosen)) + 1):
            steps[0] += 1
            if steps[0] > budget:
                raise BudgetError(f"homogeneous-set search exceeded {budget} steps")
            w = want
            ok = True
            if len(chosen) + 1 >= t:
                for rest in itertools.combinations(chosen, t - 1):
                    col = coloring(rest + (x,))
                    if w is None:
                        w = col
                    elif col != w:
                        ok = False
                        break
            if ok:
                found = dfs(chosen + [x], x + 1, w)
                if found is not None:
                    return found
        return None

    return dfs([], 0, None)


def set_ramsey_threshold(t: int, s: int, q: int) -> str:
    """The classical sufficient universe size twr_t(3 s q log2 q), as text."""
    inner = 3 * s * q * math.log2(q) if q > 1 else 0
    return f"twr_{t}({inner:.6g})"
