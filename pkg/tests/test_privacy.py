import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from listpriv.errors import ExtractionError, FamilyError, ParameterError, PreconditionError
from listpriv.learners import LocationLearner, PerfectBranchLearner, UniformListLearner
from listpriv.privacy import (DPParams, IPPInstance, ThresholdFamily, check_threshold_property,
                              estimate_indistinguishability, extract_threshold_family,
                              find_almost_correct_intervals, ipp_output_from_losses, ipp_reduction,
                              packing_binary_search, packing_sample_count, randomized_response,
                              rescale_ipp, spread_instance, unscale_output, window_envelope,
                              window_length)
from listpriv.rng import stream
from listpriv.trees import ImplicitTree, sample_branch, sample_from_branch


def test_window_length_exact():
    assert window_length(1024) == 100
    assert window_length(1) == 0
    for n in range(2, 3000):
        l = window_length(n)
        assert 2 ** math.sqrt(l) <= n < 2 ** math.sqrt(l + 1)


@settings(max_examples=60)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=60), st.integers(1, 60), st.integers(1, 3))
def test_intervals_match_naive_recount(losses, length, k):
    if length > len(losses):
        with pytest.raises(ParameterError):
            find_almost_correct_intervals(losses, length, k)
        return
    got = [(iv.start, iv.loss_count) for iv in find_almost_correct_intervals(losses, length, k)]
    naive = []
    for s in range(len(losses) - length, -1, -1):
        count = sum(losses[s:s + length])
        if 2 * (k + 1) * count <= length:
            naive.append((s, count))
    assert got == naive


def test_interval_boundaries():
    n, l, k = 300, 100, 2
    assert find_almost_correct_intervals([0] * n, l, k)[0].start == n - l
    losses = [0] * n
    for j in range(16):
        losses[j * 6] = 1
    first = [iv for iv in find_almost_correct_intervals(losses, l, k) if iv.start == 0]
    assert first and first[0].loss_count == 16
    losses[95] = 1
    assert not [iv for iv in find_almost_correct_intervals(losses, l, k) if iv.start == 0]


def test_window_rate_under_random_losses():
    rng = stream(8, 0)
    l, k, n, reps = 100, 2, 1024, 200
    hits = total = 0
    for _ in range(reps):
        losses = (rng.random(n) < 1 / (k + 1)).astype(int)
        hits += len(find_almost_correct_intervals(losses, l, k))
        total += n - l + 1
    assert hits / total <= window_envelope(l, k) + 3 * math.sqrt(0.25 / total)


def test_ipp_edge_cases():
    tree = ImplicitTree(3, 1024)
    L = PerfectBranchLearner(2)
    assert ipp_reduction(tree, L, IPPInstance(1024, []), 1).output == 1024
    with pytest.raises(PreconditionError):
        ipp_reduction(tree, L, IPPInstance(1024, [0, 100]), 1)
    with pytest.raises(PreconditionError):
        ipp_reduction(ImplicitTree(2, 1024), L, IPPInstance(1024, [0]), 1)
    inst = IPPInstance(1024, [0, 200, 500])
    assert ipp_reduction(tree, L, inst, 3, 4) == ipp_reduction(tree, L, inst, 3, 4)


def test_rescale():
    assert rescale_ipp([100, 300, 900], 1000, 100) == ((1, 3, 9), 10)
    assert rescale_ipp([3, 7], 10, 1) == ((3, 7), 10)
    rng = random.Random(0)
    for _ in range(200):
        n, C = rng.randint(2, 500), rng.randint(1, 40)
        inputs = sorted(rng.randrange(n) for _ in range(rng.randint(1, 6)))
        coarse, _ = rescale_ipp(inputs, n, C)
        for o in range(coarse[0], coarse[-1] + 1):
            fine = unscale_output(o, C)
            assert any(abs(fine - p) <= C for p in range(inputs[0], inputs[-1] + 1))
    inst, C = spread_instance([1, 2, 5], 1024)
    assert C == 101 and inst.inputs == (101, 202, 505)


def test_indistinguishability_estimates():
    blind = estimate_indistinguishability(lambda s, rng: int(rng.random() < 0.5), [0], [1],
                                          {"one": lambda o: o == 1}, 4000, 1)
    assert blind.eps_lower == 0 and blind.eps_hat < 1e-12
    rr = estimate_indistinguishability(randomized_response(0.25), [0], [1],
                                       {"one": lambda o: o == 1, "zero": lambda o: o == 0}, 20000, 2,
                                       claimed=DPParams(math.log(3)))
    assert abs(rr.eps_hat - math.log(3)) < 0.1
    assert rr.violations == []
    tight = estimate_indistinguishability(randomized_response(0.25), [0], [1],
                                          [lambda o: o == 1], 20000, 2, claimed=DPParams(0.1))
    assert tight.violations == ["E0"]
    with pytest.raises(PreconditionError):
        estimate_indistinguishability(randomized_response(0.25), [0, 0], [1, 1], [bool], 10, 0)


def test_post_processing_never_amplifies():
    rr = randomized_response(0.25)
    post = lambda s, rng: 1 - rr(s, rng) if rng.random() < 0.1 else rr(s, rng)
    events = {"one": lambda o: o == 1}
    before = estimate_indistinguishability(rr, [0], [1], events, 20000, 5)
    after = estimate_indistinguishability(post, [0], [1], events, 20000, 5)
    assert after.eps_hat <= before.eps_hat + 2 * after.width


def test_reduction_is_post_processing_of_responses():
    n, k = 1024, 2
    tree = ImplicitTree(k + 1, n)
    inst = IPPInstance(n, [120 * i for i in range(8)])
    learners = (PerfectBranchLearner(k), UniformListLearner(k))

    def mechanism(sample, rng):
        # (ln 3)-indistinguishable choice between two hypothesis distributions
        pick = int(sample[0]) ^ int(rng.random() < 0.25)
        edges = tuple(int(e) for e in rng.integers(0, k + 1, size=n))
        S = sample_from_branch(tree, edges, inst.inputs).examples
        miss = learners[pick].miss_along_branch(S, edges)
        return ipp_output_from_losses(inst, (rng.random(n) < miss).astype(int), k).output

    events = {"interior": lambda o: o <= 840, "fallback": lambda o: o == n}
    rep = estimate_indistinguishability(mechanism, [0], [1], events, 1500, 9, claimed=DPParams(math.log(3)))
    assert rep.violations == []
    assert rep.eps_lower <= math.log(3)


def test_packing_exact_exhaustive():
    for n in range(1, 17):
        F = ThresholdFamily.bernoulli(n, 0.5, 0.1)
        for i in range(n):
            assert packing_binary_search(F, i, None, 0) == i
    assert packing_sample_count(0.2, 3) == 28


def test_packing_family_guards():
    with pytest.raises(FamilyError):
        ThresholdFamily.bernoulli(8, 0.5, 0.0)
    bad = np.full((4, 4), 0.7)
    with pytest.raises(FamilyError):
        ThresholdFamily(4, 0.5, 0.1, bad)
    with pytest.raises(ParameterError):
        packing_binary_search(ThresholdFamily.bernoulli(4, 0.5, 0.1), 4, 10, 0)


def test_threshold_family_from_monotone_profile():
    L = LocationLearner(2, m=3)
    F = extract_threshold_family(L, range(14), 3, 2)
    assert F.meta["jump"] == 2 and F.margin == pytest.approx(1 / 1200)
    assert check_threshold_property(F, 4000, 3) == []
    with pytest.raises(ExtractionError):
        extract_threshold_family(LocationLearner(2, table=lambda i: [1 / 3] * 3), range(12), 3, 2)
    with pytest.raises(PreconditionError):
        from listpriv.learners import PositionLearner
        extract_threshold_family(PositionLearner(1), range(8), 2, 1)


def test_jump_location_matches_exhaustive_scan():
    L = LocationLearner(1, m=2)
    F = extract_threshold_family(L, range(10), 2, 1)
    rows = {i: L.table(i) for i in range(3)}
    jumps = [max(abs(a - b) for a, b in zip(rows[i], rows[i - 1])) for i in (1, 2)]
    first = next(i for i, j in zip((1, 2), jumps) if j >= 3 / 200)
    assert F.meta["jump"] == first
