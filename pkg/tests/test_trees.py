import itertools

import pytest
from hypothesis import given, strategies as st

from listpriv.core import gen_branch_class, branch_domain
from listpriv.errors import ChainError, CompatibilityError, ParameterError, ParseError
from listpriv.trees import (ExplicitTree, ImplicitTree, SubtreeEmbedding, TreeSample, chain_type,
                            chains, embedded_tree, extend_sample, is_compatible, is_shattered,
                            iter_paths, loc, parse_tree, sample_branch, sample_from_branch,
                            serialize_tree, verify_embedding)


def random_tree(draw, b, n, points, labels):
    pts = {v: draw(st.sampled_from(points)) for v in iter_paths(b, n - 1)} if n else {}
    labs = {v: draw(st.permutations(labels))[:b] for v in pts}
    return ExplicitTree(b, n, pts, labs)


@st.composite
def trees(draw):
    b = draw(st.integers(2, 3))
    n = draw(st.integers(0, 3))
    return random_tree(draw, b, n, list(range(5)), list(range(b + 1)))


@given(trees())
def test_tree_text_roundtrip(t):
    assert parse_tree(serialize_tree(t)) == t


def test_tree_parse_errors():
    with pytest.raises(ParseError):
        parse_tree('{"arity": 2, "depth": 1, "root": {"point": 0, "children": [null]}}')
    with pytest.raises(ParseError):
        parse_tree('{"arity": 2, "depth": 1}')
    with pytest.raises(ParseError):
        parse_tree('{"arity": 2, "depth": 1, "root": {"point": 0, "labels": [1, 1], '
                   '"children": [null, null]}}')


def test_chain_types():
    assert chain_type([(0, 1, 1), (), (0,)]) == (0, 1)
    with pytest.raises(ChainError):
        chain_type([(0,), (1,)])
    with pytest.raises(ChainError):
        chain_type([(), (5,)], ImplicitTree(2, 3))
    verts = list(iter_paths(2, 2))
    # chains of size 2 = ancestor/descendant pairs
    pairs = [(u, v) for u in verts for v in verts if len(u) < len(v) and v[: len(u)] == u]
    assert sorted(chains(verts, 2)) == sorted(pairs)
    assert list(chains(verts, 0)) == [()]


def test_branch_class_shatters_its_tree():
    for depth in (1, 2, 3):
        C = gen_branch_class(depth, 2)
        index = {v: i for i, v in enumerate(branch_domain(depth, 2))}
        t = ExplicitTree.from_function(3, depth, lambda v: index[v])
        assert is_shattered(t, C)
        if depth > 1:
            # asking the root point twice cannot be realized on every path
            bad = ExplicitTree.from_function(3, depth, lambda v: 0)
            assert not is_shattered(bad, C)


def test_samples_and_loc():
    t = ImplicitTree(3, 4)
    S = sample_from_branch(t, (2, 0, 1, 1), (0, 2))
    assert S.vertices == ((), (2, 0)) and S.labels == (2, 1)
    assert S.continuation() == (2, 0, 1)
    assert loc(S, (2,)) == 1
    assert loc(S, (2, 0, 1)) == 2
    assert not is_compatible(S, (1,))
    with pytest.raises(CompatibilityError):
        loc(S, (2, 1))
    ext = extend_sample(S, (2,))
    assert ext.vertices == ((), (2,), (2, 0)) and ext.labels == (2, 0, 1)
    ext = extend_sample(S, (2, 0, 1))
    assert ext.labels[-1] == 0
    with pytest.raises(ChainError):
        TreeSample(t, ((), (1,)), (0, 0))
    with pytest.raises(CompatibilityError):
        extend_sample(S, ())


def test_sample_branch_is_seeded():
    t = ImplicitTree(3, 50)
    assert sample_branch(t, 1, 7) == sample_branch(t, 1, 7)
    assert sample_branch(t, 1, 7) != sample_branch(t, 1, 8)
    with pytest.raises(ParameterError):
        sample_branch(ImplicitTree(2, None), 1)


def test_embedding_checks():
    host = ImplicitTree(2, 4)
    emb = SubtreeEmbedding(2, 1, {(): (1,), (0,): (1, 0, 1), (1,): (1, 1)})
    assert verify_embedding(emb, host)
    sub = embedded_tree(host, emb)
    assert sub.point(()) == (1,) and sub.depth == 1
    bad = SubtreeEmbedding(2, 1, {(): (1,), (0,): (1, 1, 0), (1,): (1, 1)})
    assert not verify_embedding(bad, host)
    assert verify_embedding(SubtreeEmbedding.identity(2, 4), host)
    assert SubtreeEmbedding.from_dict(emb.to_dict()) == emb


def test_is_shattered_brute_force():
    # every depth-1 tree over a 2-point class: shattered iff both labels occur at the point
    from listpriv.core import ConceptClass
    C = ConceptClass(2, 3, [(0, 1), (1, 1), (2, 0)])
    for x in range(2):
        for ys in itertools.combinations(range(3), 2):
            t = ExplicitTree(2, 1, {(): x}, {(): ys})
            assert is_shattered(t, C) == all(any(c[x] == y for c in C) for y in ys)
