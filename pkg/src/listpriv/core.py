"""Finite concept classes, k-list hypotheses and the witness-class generators.

Domain points are the integers ``0..n-1`` in their natural order and labels
are ``0..l-1``.  A concept is a dense tuple of labels indexed by point.
"""
from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import BudgetError, DomainMismatchError, ParameterError, ParseError

DEFAULT_MAX_CONCEPTS = 10**6


def concept_budget(budget: int | None = None) -> int:
    if budget is not None:
        return budget
    return int(os.environ.get("LISTPRIV_MAX_CONCEPTS", DEFAULT_MAX_CONCEPTS))


@dataclass(frozen=True)
class LabeledExample:
    point: int
    label: int


Sample = tuple  # tuple[LabeledExample, ...]; plain (point, label) pairs are accepted too


def as_example(ex) -> LabeledExample:
    if isinstance(ex, LabeledExample):
        return ex
    point, label = ex
    return LabeledExample(point, label)


class ConceptClass:
    """An immutable, deduplicated set of concepts over ``[n] -> [l]``.

    Concepts are kept in sorted order, so equality of two classes is set
    equality and indices into ``concepts`` are canonical.
    """

    __slots__ = ("domain_size", "label_count", "concepts", "_hash")

    def __init__(self, domain_size: int, label_count: int, concepts: Iterable[Sequence[int]]):
        if domain_size < 1:
            raise ParameterError("domain size must be at least 1")
        if label_count < 2:
            raise ParameterError("label count must be at least 2")
        uniq = set()
        for c in concepts:
            c = tuple(int(v) for v in c)
            if len(c) != domain_size:
                raise DomainMismatchError(f"concept {c} has length {len(c)}, expected {domain_size}")
            if any(v < 0 or v >= label_count for v in c):
                raise DomainMismatchError(f"concept {c} uses a label outside 0..{label_count - 1}")
            uniq.add(c)
        if not uniq:
            raise ParameterError("a concept class must be nonempty")
        self.domain_size = domain_size
        self.label_count = label_count
        self.concepts = tuple(sorted(uniq))
        self._hash = hash((domain_size, label_count, self.concepts))

    def __len__(self):
        return len(self.concepts)

    def __iter__(self):
        return iter(self.concepts)

    def __contains__(self, c):
        return tuple(c) in set(self.concepts)

    def __eq__(self, other):
        if not isinstance(other, ConceptClass):
            return NotImplemented
        return (self.domain_size, self.label_count, self.concepts) == (
            other.domain_size, other.label_count, other.concepts)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"ConceptClass(n={self.domain_size}, l={self.label_count}, |C|={len(self)})"

    def restrict(self, points: Sequence[int]) -> set[tuple[int, ...]]:
        """Patterns the class realizes on ``points`` (in the given order)."""
        return {tuple(c[x] for x in points) for c in self.concepts}

    def consistent(self, examples) -> list[tuple[int, ...]]:
        exs = [as_example(e) for e in examples]
        return [c for c in self.concepts if all(c[e.point] == e.label for e in exs)]


class ListHypothesis:
    """A map from each domain point to a set of exactly ``k`` labels."""

    __slots__ = ("k", "label_count", "predictions")

    def __init__(self, predictions: Sequence[Iterable[int]], label_count: int, k: int):
        if k < 1:
            raise ParameterError("list size k must be at least 1")
        if k >= label_count:
            # a full list can never err; treated as a degenerate request
            raise ParameterError(f"list size k={k} must be smaller than the label count {label_count}")
        preds = []
        for x, labels in enumerate(predictions):
            s = frozenset(int(y) for y in labels)
            if len(s) != k:
                raise ParameterError(f"prediction at point {x} has {len(s)} labels, expected {k}")
            if any(y < 0 or y >= label_count for y in s):
                raise DomainMismatchError(f"prediction at point {x} uses a label out of range")
            preds.append(s)
        self.k = k
        self.label_count = label_count
        self.predictions = tuple(preds)

    @property
    def domain_size(self):
        return len(self.predictions)

    def __call__(self, x: int) -> frozenset:
        if not 0 <= x < len(self.predictions):
            raise DomainMismatchError(f"point {x} outside the hypothesis domain")
        return self.predictions[x]


def list_loss(h: ListHypothesis, ex) -> int:
    ex = as_example(ex)
    return int(ex.label not in h(ex.point))


def empirical_loss(h: ListHypothesis, sample) -> Fraction:
    exs = [as_example(e) for e in sample]
    if not exs:
        raise ParameterError("empirical loss of an empty sample is undefined")
    return Fraction(sum(list_loss(h, e) for e in exs), len(exs))


def is_monotone(values: Sequence[int]) -> bool:
    return all(a <= b for a, b in zip(values, values[1:]))


def _check_budget(count: int, budget: int | None, what: str):
    cap = concept_budget(budget)
    if count > cap:
        raise BudgetError(f"{what} would produce {count} concepts, above the budget of {cap}",
                          requested=count, budget=cap)


def gen_monotone_class(n: int, label_count: int, budget: int | None = None) -> ConceptClass:
    """All weakly increasing functions ``[n] -> [label_count]``."""
    if n < 1 or label_count < 2:
        raise ParameterError("need n >= 1 and label_count >= 2")
    _check_budget(math.comb(n + label_count - 1, label_count - 1), budget, "monotone class")
    concepts = itertools.combinations_with_replacement(range(label_count), n)
    return ConceptClass(n, label_count, concepts)


def branch_domain(depth: int, k: int) -> list[tuple[int, ...]]:
    """Vertices of the complete (k+1)-ary tree of the given depth.

    Canonical order: breadth first, lexicographic on path strings within a
    level.  The position of a vertex in this list is its domain point.
    """
    out = []
    for level in range(depth + 1):
        out.extend(itertools.product(range(k + 1), repeat=level))
    return out


def gen_branch_class(depth: int, k: int, budget: int | None = None) -> ConceptClass:
    """One concept per root-to-leaf branch of the complete (k+1)-ary tree.

    A vertex on the branch (the root included) is labeled with the edge the
    branch takes out of it; every other vertex, and the final leaf, gets 0.
    """
    if depth < 1 or k < 1:
        raise ParameterError("need depth >= 1 and k >= 1")
    _check_budget((k + 1) ** depth, budget, "branch class")
    verts = branch_domain(depth, k)
    index = {v: i for i, v in enumerate(verts)}
    concepts = []
    for branch in itertools.product(range(k + 1), repeat=depth):
        c = [0] * len(verts)
        for level in range(depth):
            c[index[branch[:level]]] = branch[level]
        concepts.append(c)
    return ConceptClass(len(verts), k + 1, concepts)


def gen_full_class(n: int, label_count: int, budget: int | None = None) -> ConceptClass:
    if n < 1 or label_count < 2:
        raise ParameterError("need n >= 1 and label_count >= 2")
    _check_budget(label_count**n, budget, "full class")
    return ConceptClass(n, label_count, itertools.product(range(label_count), repeat=n))


# -- concept-class text format -------------------------------------------------

def serialize_class(C: ConceptClass) -> str:
    rows = ",\n    ".join(json.dumps(list(c)) for c in C.concepts)
    return (
        "{\n"
        f'  "domain_size": {C.domain_size},\n'
        f'  "label_count": {C.label_count},\n'
        f'  "concepts": [\n    {rows}\n  ]\n'
        "}\n"
    )


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _concept_offsets(text: str) -> list[int]:
    """Character offsets of each inner array of the ``concepts`` field."""
    key = text.find('"concepts"')
    if key < 0:
        return []
    start = text.find("[", key)
    offsets, depth, in_str, i = [], 0, False, start
    while 0 <= i < len(text):
        ch = text[i]
        if in_str:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "[":
            depth += 1
            if depth == 2:
                offsets.append(i)
        elif ch == "]":
            depth -= 1
            if depth == 0:
                break
        i += 1
    return offsets


def parse_class(text: str) -> ConceptClass:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    for field in ("domain_size", "label_count", "concepts"):
        if field not in data:
            raise ParseError(f"missing field {field!r}")
    n, ell, rows = data["domain_size"], data["label_count"], data["concepts"]
    if not (isinstance(n, int) and isinstance(ell, int)) or isinstance(n, bool) or isinstance(ell, bool):
        raise ParseError("domain_size and label_count must be integers", *_line_col(text, text.find('"domain_size"')))
    if not isinstance(rows, list):
        raise ParseError("concepts must be an array", *_line_col(text, text.find('"concepts"')))
    offsets = _concept_offsets(text)
    for i, row in enumerate(rows):
        where = _line_col(text, offsets[i]) if i < len(offsets) else (1, 1)
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"concept {i} must be an array of {n} labels", *where)
        if any(not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < ell for v in row):
            raise ParseError(f"concept {i} has a label outside 0..{ell - 1}", *where)
    try:
        return ConceptClass(n, ell, rows)
    except (ParameterError, DomainMismatchError) as exc:
        raise ParseError(str(exc)) from None


def load_class(path) -> ConceptClass:
    with open(path, encoding="utf-8") as fh:
        return parse_class(fh.read())
