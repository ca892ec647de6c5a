"""Privacy primitives and the two attack reductions.

The interval reduction runs a k-list learner on a sample planted along a
random branch and reads an interior point off the depths where the
learner's hypothesis is almost always right.  A hypothesis is realized by
independent per-vertex Bernoulli misses drawn from the learner's profile.

The packing attack runs binary search over a threshold family of
distributions using empirical event frequencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import mpmath
import numpy as np

from .errors import (ExtractionError, FamilyError, ParameterError, PreconditionError)
from .learners import LossProfileLearner, check_balanced_cb, balanced_labels, checked_profile
from .rng import stream
from .trees import sample_branch, sample_from_branch


@dataclass(frozen=True)
class DPParams:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0 or not 0 <= self.delta <= 1:
            raise ParameterError("need epsilon >= 0 and delta in [0, 1]")


# -- empirical indistinguishability ------------------------------------------------

def _differing_positions(S, S2) -> int:
    if len(S) != len(S2):
        raise PreconditionError("neighboring samples must have the same size")
    return sum(1 for a, b in zip(S, S2) if a != b)


@dataclass
class EventEstimate:
    name: str
    p: float
    q: float
    width: float
    eps_hat: float | None
    eps_lower: float
    violation: bool


@dataclass
class IndistinguishabilityReport:
    trials: int
    width: float
    events: list[EventEstimate]
    eps_hat: float | None
    eps_lower: float
    delta_hat: float | None
    violations: list[str] = field(default_factory=list)


def estimate_indistinguishability(mechanism: Callable, S: Sequence, S2: Sequence,
                                  events: Mapping[str, Callable] | Sequence[Callable],
                                  trials: int, seed: int, claimed: DPParams | None = None,
                                  beta: float = 0.05) -> IndistinguishabilityReport:
    """Frequencies of each event under ``mechanism(S)`` and ``mechanism(S2)``.

    Both runs of trial t share the random stream ``(seed, t)``.  Intervals
    are Hoeffding bounds holding simultaneously for all events with
    probability 1-beta.  ``eps_hat`` is the largest observed log ratio
    (None when some frequency is zero) and ``eps_lower`` the largest ratio
    still certified after shrinking by the interval width.
    """
    if _differing_positions(S, S2) > 1:
        raise PreconditionError("samples differ in more than one example")
    if trials < 1:
        raise ParameterError("need at least one trial")
    if not isinstance(events, Mapping):
        events = {f"E{i}": e for i, e in enumerate(events)}
    names = list(events)
    hits = np.zeros((2, len(names)), dtype=np.int64)
    for t in range(trials):
        for side, sample in enumerate((S, S2)):
            out = mechanism(sample, stream(seed, t))
            for j, name in enumerate(names):
                hits[side, j] += bool(events[name](out))
    width = math.sqrt(math.log(4 * len(names) / beta) / (2 * trials))
    rows, worst, worst_lower, delta_hat, flagged = [], 0.0, 0.0, 0.0, []
    undefined = False
    for j, name in enumerate(names):
        p, q = hits[0, j] / trials, hits[1, j] / trials
        if p > 0 and q > 0:
            eps = abs(math.log(p / q))
            worst = max(worst, eps)
        else:
            eps = None
            if p != q:
                undefined = True
        lower = 0.0
        for a, b in ((p, q), (q, p)):
            if a - width > 0:
                lower = max(lower, math.log((a - width) / min(1.0, b + width)))
        worst_lower = max(worst_lower, lower)
        bad = False
        if claimed is not None:
            bound = math.exp(claimed.epsilon)
            delta_hat = max(delta_hat, p - bound * q, q - bound * p)
            bad = (p - width > bound * (q + width) + claimed.delta
                   or q - width > bound * (p + width) + claimed.delta)
            if bad:
                flagged.append(name)
        rows.append(EventEstimate(name, float(p), float(q), width, eps, lower, bad))
    return IndistinguishabilityReport(
        trials, width, rows, None if undefined else worst, worst_lower,
        max(delta_hat, 0.0) if claimed is not None else None, flagged)


def randomized_response(flip: float) -> Callable:
    """Release the first bit of the sample, flipped with probability ``flip``."""
    def mechanism(sample, rng):
        return int(sample[0]) ^ int(rng.random() < flip)
    return mechanism


# -- interior point problem ----------------------------------------------------------

def window_length(n: int) -> int:
    """floor(log2(n)^2), exact for every positive integer n."""
    if n < 1:
        raise ParameterError("n must be positive")
    if n & (n - 1) == 0:
        return (n.bit_length() - 1) ** 2
    with mpmath.workdps(60):
        return int(mpmath.floor(mpmath.log(n, 2) ** 2))


@dataclass(frozen=True)
class IPPInstance:
    n: int
    inputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(sorted(int(d) for d in self.inputs)))
        if any(not 0 <= d < self.n for d in self.inputs):
            raise ParameterError(f"inputs must lie in 0..{self.n - 1}")

    def is_interior(self, out: int) -> bool:
        return bool(self.inputs) and self.inputs[0] <= out <= self.inputs[-1]


@dataclass(frozen=True)
class AlmostCorrectInterval:
    start: int
    length: int
    loss_count: int


def interval_threshold(length: int, k: int) -> int:
    return length // (2 * (k + 1))


def find_almost_correct_intervals(losses: Sequence[int], length: int, k: int) -> list[AlmostCorrectInterval]:
    """Every window of ``length`` consecutive depths with at most
    ``length // (2(k+1))`` misses, deepest start first."""
    n = len(losses)
    if length > n or length < 1:
        raise ParameterError(f"window length {length} must lie in 1..{n}")
    cs = np.concatenate(([0], np.cumsum(np.asarray(losses, dtype=np.int64))))
    counts = cs[length:] - cs[:-length]
    thr = interval_threshold(length, k)
    starts = np.nonzero(counts <= thr)[0][::-1]
    return [AlmostCorrectInterval(int(s), length, int(counts[s])) for s in starts]


@dataclass(frozen=True)
class IPPOutcome:
    output: int
    interior: bool
    below_sample: bool
    within_sample: bool
    intervals: int


def ipp_output_from_losses(inst: IPPInstance, losses: Sequence[int], k: int) -> IPPOutcome:
    """The reduction's answer given the hypothesis' misses along the branch."""
    n, l = inst.n, window_length(inst.n)
    if not inst.inputs:
        return IPPOutcome(n, False, False, False, 0)
    found = find_almost_correct_intervals(losses, l, k)
    out = found[0].start if found else n
    lo, hi = inst.inputs[0], inst.inputs[-1]
    below = any(iv.start > hi for iv in found)
    within = any(iv.start >= lo and iv.start + l - 1 <= hi for iv in found)
    return IPPOutcome(out, inst.is_interior(out), below, within, len(found))


def _check_gaps(inst: IPPInstance):
    l = window_length(inst.n)
    for a, b in zip(inst.inputs, inst.inputs[1:]):
        if b - a <= l:
            raise PreconditionError(f"inputs {a} and {b} are not more than {l} apart")


def ipp_reduction(tree, L: LossProfileLearner, inst: IPPInstance, seed: int,
                  trial: int = 0) -> IPPOutcome:
    """One run of the interval reduction on the given tree."""
    if tree.arity != L.k + 1:
        raise PreconditionError(f"tree arity {tree.arity} must equal k+1={L.k + 1}")
    if tree.depth != inst.n:
        raise PreconditionError(f"tree depth {tree.depth} must equal n={inst.n}")
    if not inst.inputs:
        return IPPOutcome(inst.n, False, False, False, 0)
    _check_gaps(inst)
    branch = sample_branch(tree, seed, trial, 0)
    sample = sample_from_branch(tree, branch.edges, inst.inputs).examples
    miss = L.miss_along_branch(sample, branch.edges)
    losses = stream(seed, trial, 1).random(inst.n) < miss
    return ipp_output_from_losses(inst, losses.astype(np.int64), L.k)


def chernoff_envelope(n: int, k: int) -> float:
    """n * exp(-l / (8(k+1))): bound on seeing any almost-correct window below the sample."""
    return n * math.exp(-window_length(n) / (8 * (k + 1)))


def window_envelope(length: int, k: int) -> float:
    return math.exp(-length / (8 * (k + 1)))


def rescale_ipp(inputs: Sequence[int], n: int, C: int) -> tuple[tuple, int]:
    """Map inputs to ceil(d/C) on the domain ceil(n/C)."""
    if C < 1:
        raise ParameterError("scale must be at least 1")
    return tuple(-(-int(d) // C) for d in inputs), -(-n // C)


def unscale_output(out: int, C: int) -> int:
    """A point within C of an interior point of the original instance."""
    return out * C


def spread_instance(inputs: Sequence[int], n: int) -> tuple[IPPInstance, int]:
    """Place coarse inputs on the depth-n tree at multiples of l+1."""
    C = window_length(n) + 1
    coarse_n = -(-n // C)
    if any(not 0 <= d < coarse_n for d in inputs):
        raise ParameterError(f"coarse inputs must lie in 0..{coarse_n - 1}")
    return IPPInstance(n, tuple(d * C for d in inputs)), C


# -- threshold families and the packing search ------------------------------------------

class ThresholdFamily:
    """Distributions P_0..P_{n-1} and events E_0..E_{n-1} with
    P_i(E_j) >= center + margin when j >= i and <= center - margin when j < i.

    ``prob`` is the exact matrix of event probabilities when known.  A
    draw from P_i is a boolean vector of event outcomes; by default the
    events are independent with the probabilities in ``prob``.
    """

    def __init__(self, n: int, center: float, margin: float, prob=None, sampler=None,
                 meta: dict | None = None):
        if margin <= 0:
            raise FamilyError("margin must be positive for the thresholds to be distinguishable")
        if prob is None and sampler is None:
            raise ParameterError("need exact probabilities or a sampler")
        self.n, self.center, self.margin = n, center, margin
        self.prob = None if prob is None else np.asarray(prob, dtype=float)
        self.meta = meta or {}
        if self.prob is not None:
            if self.prob.shape != (n, n):
                raise ParameterError(f"probability matrix must be {n}x{n}")
            bad = self.violations()
            if bad:
                raise FamilyError(f"threshold property fails at (member, event) {bad[0]}")
        self._sampler = sampler

    def violations(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.n):
            for j in range(self.n):
                v = self.prob[i, j]
                if (j >= i and v < self.center + self.margin - 1e-12) or (
                        j < i and v > self.center - self.margin + 1e-12):
                    out.append((i, j))
        return out

    def draw(self, i: int, size: int, rng: np.random.Generator) -> np.ndarray:
        if self._sampler is not None:
            return np.asarray([self._sampler(i, rng) for _ in range(size)], dtype=bool)
        return rng.random((size, self.n)) < self.prob[i]

    @classmethod
    def bernoulli(cls, n: int, center: float, margin: float) -> "ThresholdFamily":
        j, i = np.meshgrid(np.arange(n), np.arange(n))
        prob = np.where(j >= i, center + margin, center - margin)
        return cls(n, center, margin, prob)


def packing_sample_count(margin: float, steps: int) -> int:
    return math.ceil(margin ** -2 * math.log(steps))


def _search(n: int, center: float, freq: Callable[[int], float]) -> tuple[int, list]:
    lo, hi, trace = 0, n - 1, []
    while lo < hi:
        mid = (lo + hi) // 2
        f = freq(mid)
        trace.append((mid, f))
        if f <= center:
            lo = mid + 1
        else:
            hi = mid
    return lo, trace


def packing_binary_search(F: ThresholdFamily, target: int, D: int | None, seed: int,
                          trial: int = 0) -> int:
    """Binary search for the first high event using D draws from P_target.

    With ``D=None`` the exact probabilities replace the empirical measure.
    """
    if not 0 <= target < F.n:
        raise ParameterError(f"target index must lie in 0..{F.n - 1}")
    if D is None:
        if F.prob is None:
            raise ParameterError("exact search needs the probability matrix")
        found, _ = _search(F.n, F.center, lambda j: float(F.prob[target, j]))
        return found
    if D < 1:
        raise ParameterError("need at least one draw")
    draws = F.draw(target, D, stream(seed, trial))
    freqs = draws.mean(axis=0)
    found, trace = _search(F.n, F.center, lambda j: float(freqs[j]))
    return found


def check_threshold_property(F: ThresholdFamily, draws: int, seed: int,
                             sigmas: float = 3.0) -> list[tuple[int, int, float]]:
    """Empirical violations of the threshold property beyond ``sigmas``
    standard errors; an empty list means the family passes."""
    slack = sigmas * math.sqrt(0.25 / draws)
    bad = []
    for i in range(F.n):
        freqs = F.draw(i, draws, stream(seed, i)).mean(axis=0)
        for j, f in enumerate(freqs):
            if j >= i and f < F.center + F.margin - slack:
                bad.append((i, j, float(f)))
            if j < i and f > F.center - F.margin + slack:
                bad.append((i, j, float(f)))
    return bad


@dataclass(frozen=True)
class Jump:
    index: int
    coordinate: int
    size: float


def cb_jumps(table: Mapping[int, Sequence[float]], m: int) -> list[float]:
    return [float(np.max(np.abs(np.subtract(table[i], table[i - 1])))) for i in range(1, m + 1)]


def find_jump(table: Mapping[int, Sequence[float]], m: int, threshold: float) -> Jump | None:
    for i in range(1, m + 1):
        diff = np.abs(np.subtract(table[i], table[i - 1]))
        j = int(np.argmax(diff))
        if diff[j] >= threshold - 1e-12:
            return Jump(i, j, float(diff[j]))
    return None


def extract_threshold_family(L: LossProfileLearner, X: Sequence[int], m: int, k: int) -> ThresholdFamily:
    """Threshold family obtained by sliding one point of a balanced sample.

    The learner must be comparison based on X at 1/(100km).  Let i be the
    first location where the tabulated miss vector jumps by at least three
    times that, in coordinate j.  Member a trains on a balanced sample
    whose i-th point is the a-th even point of the free middle stretch of
    X; event b asks whether label j is missed at the b-th odd point.
    """
    if L.k != k or L.label_count != k + 1:
        raise ParameterError("the learner must output k-lists over labels 0..k")
    labels = balanced_labels(m, k + 1)
    X = tuple(sorted(X))
    gamma_cb = 1 / (100 * k * m)
    cb = check_balanced_cb(L, X, m, gamma_cb)
    if not cb.ok:
        raise PreconditionError(f"learner is not comparison based on X at {gamma_cb:.6g} "
                                f"(spread {cb.spread:.6g})")
    if len(cb.table) < m + 1:
        raise PreconditionError("X is too small to observe every location")
    jump = find_jump(cb.table, m, 3 * gamma_cb)
    if jump is None:
        biggest = max(cb_jumps(cb.table, m), default=0.0)
        raise ExtractionError(f"no jump of at least {3 * gamma_cb:.6g}; largest is {biggest:.6g}")
    i, coord = jump.index, jump.coordinate
    low, high = X[: i - 1], X[len(X) - (m - i):] if m > i else ()
    middle = X[i - 1: len(X) - (m - i)]
    size = len(middle) // 2
    if size < 1:
        raise PreconditionError("X leaves no room to slide the sample point")
    members = [middle[2 * a] for a in range(size)]
    tests = [middle[2 * b + 1] for b in range(size)]
    prob = np.empty((size, size))
    for a, x in enumerate(members):
        sample = tuple(zip(low + (x,) + tuple(high), labels))
        for b, t in enumerate(tests):
            prob[a, b] = checked_profile(L, sample, t)[coord]
    before, after = cb.table[i - 1][coord], cb.table[i][coord]
    if after < before:
        prob = 1.0 - prob
        before, after = 1.0 - before, 1.0 - after
    center = (before + after) / 2
    meta = {"jump": i, "coordinate": coord, "jump_size": jump.size, "members": members,
            "tests": tests, "complemented": bool(cb.table[i][coord] < cb.table[i - 1][coord])}
    return ThresholdFamily(size, center, gamma_cb / 2, prob, meta=meta)
