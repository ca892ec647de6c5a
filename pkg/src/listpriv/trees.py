"""Mistake trees, chains, tree samples and subtree embeddings.

Vertices are addressed by their root path: a tuple of child positions in
``0..b-1``.  The root is ``()``.  A tree of depth ``n`` has internal
vertices on levels ``0..n-1`` and leaves on level ``n``.  Every internal
vertex carries a domain point and ``b`` distinct edge labels, one per child
position.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Hashable, Iterator, Mapping, Sequence

from .core import ConceptClass
from .errors import ChainError, CompatibilityError, DomainMismatchError, ParameterError, ParseError
from .rng import stream

Path = tuple


def is_ancestor(u: Path, v: Path) -> bool:
    """True when ``u`` is a proper ancestor of ``v``."""
    return len(u) < len(v) and v[: len(u)] == u


def is_descendant_or_self(v: Path, u: Path) -> bool:
    return len(v) >= len(u) and v[: len(u)] == u


def iter_paths(b: int, depth: int) -> Iterator[Path]:
    """Paths of length ``0..depth`` in breadth-first, then lexicographic order."""
    for level in range(depth + 1):
        yield from itertools.product(range(b), repeat=level)


class _TreeBase:
    arity: int
    depth: int | None

    def contains(self, v: Path) -> bool:
        if any(not 0 <= r < self.arity for r in v):
            return False
        return self.depth is None or len(v) <= self.depth

    def is_internal(self, v: Path) -> bool:
        return self.contains(v) and (self.depth is None or len(v) < self.depth)

    def _need_internal(self, v: Path):
        if not self.is_internal(v):
            raise DomainMismatchError(f"{v} is not an internal vertex of the tree")

    def child_for_label(self, v: Path, y) -> Path:
        labels = self.labels(v)
        try:
            return v + (labels.index(y),)
        except ValueError:
            raise DomainMismatchError(f"label {y} is not on an edge out of {v}") from None

    def internal_vertices(self) -> Iterator[Path]:
        if self.depth is None:
            raise ParameterError("an unbounded tree has no finite vertex list")
        return iter_paths(self.arity, self.depth - 1) if self.depth > 0 else iter(())


class ImplicitTree(_TreeBase):
    """A complete b-ary tree that is never materialized.

    The domain point at a vertex is its path, so points are distinct, and
    the edge to child ``r`` is labeled ``r``.  ``depth=None`` gives an
    unbounded tree for lazy searches.
    """

    def __init__(self, arity: int, depth: int | None):
        if arity < 2:
            raise ParameterError("tree arity must be at least 2")
        if depth is not None and depth < 0:
            raise ParameterError("tree depth must be nonnegative")
        self.arity = arity
        self.depth = depth

    def point(self, v: Path):
        self._need_internal(v)
        return v

    def labels(self, v: Path) -> tuple:
        self._need_internal(v)
        return tuple(range(self.arity))

    def __repr__(self):
        return f"ImplicitTree(arity={self.arity}, depth={self.depth})"


class ExplicitTree(_TreeBase):
    """A fully materialized complete b-ary mistake tree.

    Points may repeat across vertices.  Edge labels default to the child
    positions ``0..b-1``.
    """

    def __init__(self, arity: int, depth: int, points: Mapping[Path, Hashable],
                 labels: Mapping[Path, Sequence] | None = None):
        if arity < 2:
            raise ParameterError("tree arity must be at least 2")
        if depth < 0:
            raise ParameterError("tree depth must be nonnegative")
        self.arity = arity
        self.depth = depth
        self._points = {}
        self._labels = {}
        for v in self.internal_vertices():
            if v not in points:
                raise ParameterError(f"internal vertex {v} has no point")
            self._points[v] = points[v]
            lab = tuple(labels[v]) if labels is not None and v in labels else tuple(range(arity))
            if len(lab) != arity or len(set(lab)) != arity:
                raise ParameterError(f"vertex {v} needs {arity} distinct edge labels, got {lab}")
            self._labels[v] = lab
        extra = set(points) - set(self._points)
        if extra:
            raise ParameterError(f"points given for non-internal vertices: {sorted(extra)[:3]}")

    @classmethod
    def from_function(cls, arity: int, depth: int, point_of: Callable[[Path], Hashable],
                      labels_of: Callable[[Path], Sequence] | None = None) -> "ExplicitTree":
        verts = list(iter_paths(arity, depth - 1)) if depth > 0 else []
        pts = {v: point_of(v) for v in verts}
        labs = {v: labels_of(v) for v in verts} if labels_of else None
        return cls(arity, depth, pts, labs)

    @classmethod
    def path_tree(cls, arity: int, depth: int) -> "ExplicitTree":
        """The materialized counterpart of ``ImplicitTree``: points are paths."""
        return cls.from_function(arity, depth, lambda v: v)

    def point(self, v: Path):
        self._need_internal(v)
        return self._points[v]

    def labels(self, v: Path) -> tuple:
        self._need_internal(v)
        return self._labels[v]

    def branches(self) -> Iterator[Path]:
        return itertools.product(range(self.arity), repeat=self.depth)

    def path_examples(self, branch: Path) -> list[tuple]:
        return [(self._points[branch[:i]], self._labels[branch[:i]][branch[i]])
                for i in range(len(branch))]

    def __eq__(self, other):
        if not isinstance(other, ExplicitTree):
            return NotImplemented
        return (self.arity, self.depth, self._points, self._labels) == (
            other.arity, other.depth, other._points, other._labels)

    def __repr__(self):
        return f"ExplicitTree(arity={self.arity}, depth={self.depth})"


# -- text format -----------------------------------------------------------------

def _point_to_json(p):
    return list(p) if isinstance(p, tuple) else p


def _point_from_json(p):
    return tuple(p) if isinstance(p, list) else p


def tree_to_dict(t: ExplicitTree) -> dict:
    def node(v):
        if len(v) == t.depth:
            return None
        return {"point": _point_to_json(t.point(v)), "labels": list(t.labels(v)),
                "children": [node(v + (r,)) for r in range(t.arity)]}
    return {"arity": t.arity, "depth": t.depth, "root": node(())}


def serialize_tree(t: ExplicitTree) -> str:
    return json.dumps(tree_to_dict(t), indent=1) + "\n"


def tree_from_dict(data: dict) -> ExplicitTree:
    if not isinstance(data, dict) or not {"arity", "depth", "root"} <= set(data):
        raise ParseError("tree needs fields arity, depth and root")
    b, n = data["arity"], data["depth"]
    pts, labs = {}, {}

    def walk(node, v):
        if len(v) == n:
            if node is not None:
                raise ParseError(f"vertex {list(v)} lies below the declared depth")
            return
        if not isinstance(node, dict) or "point" not in node or "children" not in node:
            raise ParseError(f"internal vertex {list(v)} is missing or malformed")
        kids = node["children"]
        if not isinstance(kids, list) or len(kids) != b:
            raise ParseError(f"vertex {list(v)} must have {b} children")
        pts[v] = _point_from_json(node["point"])
        if "labels" in node:
            labs[v] = node["labels"]
        for r, kid in enumerate(kids):
            walk(kid, v + (r,))

    walk(data["root"], ())
    try:
        return ExplicitTree(b, n, pts, labs)
    except ParameterError as exc:
        raise ParseError(str(exc)) from None


def parse_tree(text: str) -> ExplicitTree:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return tree_from_dict(data)


# -- chains ----------------------------------------------------------------------

def as_chain(vertices) -> tuple[Path, ...]:
    """Sort vertices by depth and check that they form a chain."""
    chain = tuple(sorted((tuple(v) for v in vertices), key=len))
    for u, v in zip(chain, chain[1:]):
        if not is_ancestor(u, v):
            raise ChainError(f"vertices {u} and {v} are not strictly comparable")
    return chain


def chain_type(chain, tree: _TreeBase | None = None) -> tuple[int, ...]:
    """Child positions taken between consecutive chain vertices."""
    c = as_chain(chain)
    if tree is not None:
        for v in c:
            if not tree.contains(v):
                raise ChainError(f"vertex {v} is not in the tree")
    return tuple(v[len(u)] for u, v in zip(c, c[1:]))


def chains(vertices: Sequence[Path], m: int) -> Iterator[tuple[Path, ...]]:
    """All m-chains among ``vertices`` (each returned sorted by depth)."""
    by_depth = sorted(vertices, key=len)
    index = {v: i for i, v in enumerate(by_depth)}

    def extend(prefix, start):
        if len(prefix) == m:
            yield tuple(prefix)
            return
        last = prefix[-1]
        for j in range(start, len(by_depth)):
            w = by_depth[j]
            if is_ancestor(last, w):
                prefix.append(w)
                yield from extend(prefix, j + 1)
                prefix.pop()

    if m == 0:
        yield ()
        return
    for v in by_depth:
        yield from extend([v], index[v] + 1)


# -- shattering ------------------------------------------------------------------

def is_shattered(t: ExplicitTree, C: ConceptClass) -> bool:
    """Every root-to-leaf path of ``t`` is realized by some concept of ``C``."""
    for v in t.internal_vertices():
        x = t.point(v)
        if not isinstance(x, int) or not 0 <= x < C.domain_size:
            raise DomainMismatchError(f"vertex {v} carries point {x!r} outside the class domain")
        if any(not 0 <= y < C.label_count for y in t.labels(v)):
            raise DomainMismatchError(f"vertex {v} has an edge label outside the class labels")

    def ok(v, alive):
        if not alive:
            return False
        if len(v) == t.depth:
            return True
        x = t.point(v)
        return all(ok(v + (r,), [c for c in alive if c[x] == y])
                   for r, y in enumerate(t.labels(v)))

    return ok((), list(C.concepts))


# -- tree samples ----------------------------------------------------------------

@dataclass(frozen=True)
class TreeSample:
    """Labeled vertices on one branch, sorted by depth.

    ``labels[i]`` is the edge label the realizing branch takes out of
    ``vertices[i]``.
    """

    tree: _TreeBase
    vertices: tuple
    labels: tuple

    def __post_init__(self):
        if len(self.vertices) != len(self.labels):
            raise ParameterError("vertices and labels differ in length")
        prev = None
        for v, y in zip(self.vertices, self.labels):
            self.tree._need_internal(v)
            if prev is not None and not is_descendant_or_self(v, prev):
                raise ChainError(f"sample vertex {v} is not realizable after {prev[:-1]}")
            prev = self.tree.child_for_label(v, y)

    def __len__(self):
        return len(self.vertices)

    @property
    def examples(self) -> tuple:
        """The sample as (point, label) pairs, the form learners consume."""
        return tuple((self.tree.point(v), y) for v, y in zip(self.vertices, self.labels))

    def continuation(self) -> Path | None:
        """The child of the last vertex the realizing branch passes through."""
        if not self.vertices:
            return None
        return self.tree.child_for_label(self.vertices[-1], self.labels[-1])


def sample_from_branch(tree: _TreeBase, branch: Sequence[int], depths: Sequence[int]) -> TreeSample:
    """The sample formed by the branch vertices at the given depths."""
    verts = tuple(tuple(branch[:d]) for d in depths)
    labs = tuple(tree.labels(v)[branch[len(v)]] for v in verts)
    return TreeSample(tree, verts, labs)


def is_compatible(S: TreeSample, x: Path) -> bool:
    if not S.tree.is_internal(x):
        return False
    if not S.vertices:
        return True
    if is_ancestor(x, S.vertices[-1]) or x == S.vertices[-1]:
        return True
    return is_descendant_or_self(x, S.continuation())


def loc(S: TreeSample, x: Path) -> int:
    """Number of sample vertices strictly above ``x``."""
    if not is_compatible(S, x):
        raise CompatibilityError(f"vertex {x} is not on a branch realizing the sample")
    return sum(1 for v in S.vertices if is_ancestor(v, x))


def extend_sample(S: TreeSample, x: Path) -> TreeSample:
    """``S`` with ``x`` inserted, labeled so the result stays realizable."""
    x = tuple(x)
    if x in S.vertices:
        raise CompatibilityError(f"vertex {x} is already in the sample")
    i = loc(S, x)
    if i < len(S):
        nxt = S.vertices[i]
        y = S.tree.labels(x)[nxt[len(x)]]
    else:
        y = min(S.tree.labels(x))
    return TreeSample(S.tree, S.vertices[:i] + (x,) + S.vertices[i:],
                      S.labels[:i] + (y,) + S.labels[i:])


# -- branches --------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    """A root-to-leaf path given by its child positions, one per level."""

    tree: _TreeBase
    edges: tuple

    def vertex(self, depth: int) -> Path:
        return self.edges[:depth]

    def label(self, depth: int):
        return self.tree.labels(self.vertex(depth))[self.edges[depth]]

    def __len__(self):
        return len(self.edges)


def sample_branch(t: _TreeBase, seed: int, *keys: int) -> Branch:
    if t.depth is None:
        raise ParameterError("cannot sample a full branch of an unbounded tree")
    rng = stream(seed, *keys)
    edges = rng.integers(0, t.arity, size=t.depth)
    return Branch(t, tuple(int(e) for e in edges))


# -- subtree embeddings ----------------------------------------------------------

@dataclass(frozen=True)
class SubtreeEmbedding:
    """Positions of a complete b-ary tree of depth ``depth`` mapped into a host.

    Positions include the leaf level, so a depth-0 embedding is a single
    host vertex.
    """

    arity: int
    depth: int
    image: Mapping[Path, Path]

    def __getitem__(self, pos: Path) -> Path:
        return self.image[pos]

    def positions(self) -> Iterator[Path]:
        return iter_paths(self.arity, self.depth)

    def internal_positions(self) -> Iterator[Path]:
        return iter_paths(self.arity, self.depth - 1) if self.depth > 0 else iter(())

    def to_dict(self) -> dict:
        return {"arity": self.arity, "depth": self.depth,
                "image": [[list(p), list(self.image[p])] for p in self.positions()]}

    @classmethod
    def from_dict(cls, data) -> "SubtreeEmbedding":
        return cls(data["arity"], data["depth"], {tuple(p): tuple(v) for p, v in data["image"]})

    @classmethod
    def identity(cls, arity: int, depth: int, root: Path = ()) -> "SubtreeEmbedding":
        return cls(arity, depth, {p: tuple(root) + p for p in iter_paths(arity, depth)})


def verify_embedding(emb: SubtreeEmbedding, host: _TreeBase) -> bool:
    """Structural check: position ``p+(r,)`` lands at or below child ``r`` of ``p``'s image."""
    if emb.arity != host.arity:
        return False
    for p in emb.positions():
        if p not in emb.image or not host.contains(emb.image[p]):
            return False
    for p in emb.internal_positions():
        u = emb.image[p]
        for r in range(emb.arity):
            if not is_descendant_or_self(emb.image[p + (r,)], u + (r,)):
                return False
    return True


def embedded_tree(host: _TreeBase, emb: SubtreeEmbedding) -> ExplicitTree:
    """The subtree as a standalone tree carrying the host's points and labels."""
    pts = {p: host.point(emb.image[p]) for p in emb.internal_positions()}
    labs = {p: host.labels(emb.image[p]) for p in emb.internal_positions()}
    return ExplicitTree(emb.arity, emb.depth, pts, labs)
