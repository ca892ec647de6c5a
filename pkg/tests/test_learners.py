import itertools
from fractions import Fraction

import numpy as np
import pytest

from listpriv.core import gen_branch_class, gen_monotone_class
from listpriv.dims import littlestone_dim
from listpriv.errors import (BudgetError, ParameterError, ProtocolError, RealizabilityError)
from listpriv.learners import (DepthReadingLearner, LocationLearner, MonotoneOnlineLearner,
                               MonteCarloLearner, PerfectBranchLearner, PositionLearner,
                               SOAListLearner, TypeLocLearner, UniformListLearner,
                               adversary_max_mistakes, cb_cells, check_balanced_cb, check_cb_loss,
                               checked_profile, extract_cb_subset, extract_cb_subtree, run_online)
from listpriv.trees import ExplicitTree, ImplicitTree, verify_embedding


def test_monotone_learner_small_exhaustive():
    C = gen_monotone_class(4, 3)
    for c in C:
        for length in range(1, 5):
            for xs in itertools.product(range(4), repeat=length):
                log = run_online(MonotoneOnlineLearner(2), [(x, c[x]) for x in xs])
                assert sum(row[3] for row in log) <= 1


def test_monotone_learner_protocol():
    lrn = MonotoneOnlineLearner(3)
    assert lrn.predict(0) == frozenset({0, 2, 3})
    with pytest.raises(ProtocolError):
        lrn.update(0, 7)
    with pytest.raises(ParameterError):
        MonotoneOnlineLearner(1)


def test_adversary_matches_dimension():
    C = gen_branch_class(2, 2)
    soa = SOAListLearner(C, 2)
    assert adversary_max_mistakes(soa, C, 3) <= littlestone_dim(C, 2).value
    C = gen_monotone_class(5, 3)
    assert adversary_max_mistakes(MonotoneOnlineLearner(2), C, 5) == 1


def test_soa_realizability():
    C = gen_monotone_class(3, 3)
    soa = SOAListLearner(C, 2)
    soa.step(1, 2)
    with pytest.raises(RealizabilityError):
        soa.update(2, 0)


def test_profile_boundary_checks():
    class Broken(UniformListLearner):
        def profile(self, sample, x):
            return np.array([0.0, 0.0, 0.5])
    with pytest.raises(ProtocolError):
        checked_profile(Broken(2), (), ())
    for L in (PerfectBranchLearner(2), UniformListLearner(2), TypeLocLearner(2), DepthReadingLearner(2)):
        for x in [(), (1,), (1, 2)]:
            p = checked_profile(L, (((), 1),), x)
            assert abs(np.sum(1 - p) - 2) < 1e-9


def test_perfect_learner_along_branch():
    L = PerfectBranchLearner(2)
    edges = (2, 0, 1, 1, 0)
    sample = (((), 2), ((2, 0), 1))
    fast = L.miss_along_branch(sample, edges)
    slow = [checked_profile(L, sample, edges[:j])[edges[j]] for j in range(len(edges))]
    assert np.allclose(fast, slow)
    assert list(fast[:3]) == [0, 0, 0]


def test_cb_check_accepts_factoring_learners():
    for b, n in [(2, 2), (2, 3), (3, 2), (3, 3)]:
        for tree in (ImplicitTree(b, n), ExplicitTree.path_tree(b, n)):
            for m in range(0, n):
                res = check_cb_loss(TypeLocLearner(b - 1), tree, m, 0.0)
                assert res.ok and res.spread == 0


def test_cb_check_rejects_depth_reader_with_real_counterexample():
    tree = ImplicitTree(2, 3)
    L = DepthReadingLearner(1)
    res = check_cb_loss(L, tree, 1, 0.0)
    assert not res.ok
    cell, (lo, (S1, x1)), (hi, (S2, x2)) = res.counterexample
    values = {w: v for c, v, w in cb_cells(L, tree, 1) if c == cell}
    assert values[(S1, x1)] == lo and values[(S2, x2)] == hi and hi - lo > 0
    assert check_cb_loss(L, tree, 1, 0.4).ok


def test_cb_check_budget():
    with pytest.raises(BudgetError):
        check_cb_loss(TypeLocLearner(2), ImplicitTree(3, 3), 2, 0.0, budget=10)


def test_extract_cb_subtree_unbounded_host():
    L = DepthReadingLearner(1)
    host = ImplicitTree(2, None)
    emb, report = extract_cb_subtree(L, host, 1, granularity=Fraction(1, 2), cap=None)
    assert verify_embedding(emb, host)
    assert not report["identity"] and report["colors"] == 9
    from listpriv.trees import embedded_tree
    assert check_cb_loss(L, embedded_tree(host, emb), 1, 0.25).ok


def test_extract_cb_subtree_identity_when_already_cb():
    emb, report = extract_cb_subtree(TypeLocLearner(1), ImplicitTree(2, 3), 1, granularity=Fraction(1, 4))
    assert report["identity"] and emb.depth == 3


def test_balanced_cb_and_subset_extraction():
    L = LocationLearner(1, m=2)
    assert check_balanced_cb(L, range(8), 2, 0.0).ok
    with pytest.raises(ParameterError):
        check_balanced_cb(L, range(8), 3, 0.0)
    P = PositionLearner(1)
    assert not check_balanced_cb(P, range(8), 2, 0.0).ok
    sub = extract_cb_subset(P, range(8), 2, granularity=Fraction(1, 3))
    assert len(sub) == 4 and len({x % 2 for x in sub}) == 1
    assert check_balanced_cb(P, sub, 2, 1 / 6).ok
    with pytest.raises(BudgetError):
        extract_cb_subset(P, range(8), 2)


def test_monte_carlo_wrapper():
    def sampler(sample, x, rng):
        return [int(rng.integers(0, 3))]
    mc = MonteCarloLearner(sampler, 1, 3, draws=4000, seed=2)
    p = checked_profile(mc, (), 0)
    assert np.all(np.abs(p - 2 / 3) <= mc.hoeffding_width(0.01))
    assert np.array_equal(p, mc.profile((), 0))


def test_adversary_punishes_a_fixed_list():
    from listpriv.learners import OnlineLearner

    class Fixed(OnlineLearner):
        k, label_count = 2, 3

        def predict(self, x):
            return frozenset({0, 1})

        def update(self, x, y):
            pass

        def state_key(self):
            return None

    assert adversary_max_mistakes(Fixed(), gen_monotone_class(6, 3), 6) == 6
    C = gen_branch_class(2, 2)
    assert adversary_max_mistakes(SOAListLearner(C, 2), C, 5) == 2
