import itertools

import pytest
from hypothesis import given, settings, strategies as st

from listpriv.errors import BudgetError, GateError, ParameterError, PreconditionError
from listpriv.ramsey import (homogeneous_subset, log_iter, log_star, pigeonhole_subtree,
                             ramsey_subtree, random_chain_coloring, required_depth,
                             set_ramsey_threshold, tower, verify_type_monochromatic)
from listpriv.trees import ImplicitTree, iter_paths, verify_embedding


def test_tower_and_logs():
    assert tower(1, 5) == 5
    assert tower(3, 2) == 16
    assert tower(4, 2) == 65536
    assert log_star(1) == 0 and log_star(2) == 1 and log_star(16) == 3 and log_star(65536) == 4
    assert log_iter(2, 16) == 2
    with pytest.raises(BudgetError):
        tower(5, 2, max_bits=1000)


def test_required_depth_values():
    assert required_depth(2, 2, 2, 2) == 2**40
    assert required_depth(3, 1, 4, 2) == 12
    # A = 5 b^(m-2) d c^(b^(m-1)) with b=3, m=2, d=2, c=2: 5*2*8 = 80
    assert required_depth(2, 2, 2, 3) == 2**80
    with pytest.raises(ParameterError):
        required_depth(1, 2, 2, 2)
    with pytest.raises(BudgetError):
        required_depth(3, 3, 2, 2)


def test_pigeonhole_exhaustive_on_small_tree():
    verts = list(iter_paths(2, 2))
    t = ImplicitTree(2, 2)
    for bits in itertools.product(range(2), repeat=len(verts)):
        col = dict(zip(verts, bits))
        emb = pigeonhole_subtree(t, col, 1, 2)
        assert verify_embedding(emb, t)
        assert len({col[emb[p]] for p in emb.positions()}) == 1


def test_pigeonhole_depth_precondition():
    with pytest.raises(PreconditionError):
        pigeonhole_subtree(ImplicitTree(2, 3), lambda v: len(v) % 2, 2, 2)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_ramsey_m2_random(seed):
    col = random_chain_coloring(seed, 2)
    host = ImplicitTree(2, 2**40)
    emb, report = ramsey_subtree(host, col, 2, 2, 2)
    assert verify_embedding(emb, host)
    assert verify_type_monochromatic(emb, col, 2)
    assert report["required_depth"] == 2**40
    assert report["consumed_depth"] <= 2**40


def test_ramsey_m1_and_m3():
    col = random_chain_coloring(4, 3)
    emb, _ = ramsey_subtree(ImplicitTree(2, 9), col, 3, 1, 3)
    assert verify_type_monochromatic(emb, col, 1)
    parity = lambda ch: 2 * (len(ch[0]) % 2) + len(ch[1]) % 2
    emb, report = ramsey_subtree(ImplicitTree(2, None), parity, 2, 3, 4, cap=None)
    assert verify_embedding(emb, ImplicitTree(2, None))
    assert verify_type_monochromatic(emb, parity, 3)
    assert report["required_depth"] is None


def test_ramsey_gate(monkeypatch):
    col = random_chain_coloring(1, 2)
    with pytest.raises(GateError):
        ramsey_subtree(ImplicitTree(2, None), col, 2, 3, 2)
    with pytest.raises(GateError):
        ramsey_subtree(ImplicitTree(2, None), col, 2, 2, 2, cap=2**39)
    monkeypatch.setenv("LISTPRIV_RAMSEY_CAP", "1000")
    with pytest.raises(GateError):
        ramsey_subtree(ImplicitTree(2, None), col, 2, 2, 2)
    with pytest.raises(PreconditionError):
        ramsey_subtree(ImplicitTree(2, 100), col, 2, 2, 2, cap=None)


def test_verifier_rejects_bad_colorings():
    col = random_chain_coloring(9, 2)
    emb, _ = ramsey_subtree(ImplicitTree(2, 2**40), col, 2, 2, 2)
    flipped = lambda ch: col(ch) ^ (ch == (emb[()], emb[(0,)]))
    assert not verify_type_monochromatic(emb, flipped, 2)


def test_homogeneous_set():
    # every 2-coloring of the edges of K6 has a monochromatic triangle
    edges = list(itertools.combinations(range(6), 2))
    for bits in itertools.islice(itertools.product(range(2), repeat=len(edges)), 0, 2**15, 97):
        col = dict(zip(edges, bits))
        found = homogeneous_subset(6, 2, lambda s: col[s], 3)
        assert found is not None
        assert len({col[e] for e in itertools.combinations(found, 2)}) == 1
    # the pentagon coloring on K5 has none
    pent = lambda s: int((s[1] - s[0]) % 5 in (1, 4))
    assert homogeneous_subset(5, 2, pent, 3) is None
    with pytest.raises(PreconditionError):
        homogeneous_subset(4, 2, pent, 5)
    with pytest.raises(BudgetError):
        homogeneous_subset(300, 3, lambda s: 0, 4)
    assert set_ramsey_threshold(2, 3, 2).startswith("twr_2(")
