"""Exact measurement-statistics simulation of function, phase, and subset
states, plus the copy ledger and seeded stream plumbing used by the testers.

Every primitive computes its exact outcome distribution from the truth
table and then samples it; no gate-level state vectors are involved here.
Batched helpers draw outcome counts directly from the induced binomial
laws, which is distribution-identical to per-copy sampling.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boolfn import (
    BooleanFunction,
    index_of,
    inner_product_table,
    symmetry_violation_fraction,
    walsh_transform,
)
from .errors import ArityError, BudgetExceededError


class _FailType:
    """Sentinel for an explicit post-selection failure."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "FAIL"

    def __bool__(self) -> bool:
        return False


FAIL = _FailType()


def _stable_stream_id(*parts) -> int:
    """64-bit id from arbitrary tags, stable across processes and runs."""
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True)
class RngStream:
    """Counter-based randomness source: (seed, stream) fixes the sequence.

    Children derived with distinct tags are statistically independent and
    reproducible regardless of scheduling, so parallel trials can each own
    a stream.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *tags) -> "RngStream":
        return RngStream(self.seed, _stable_stream_id(self.stream, *tags))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream or a ready numpy Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


@dataclass
class CopyLedger:
    """Counts function-state copies drawn by the sampling primitives."""

    budget: int | None = None
    consumed: int = 0

    def require(self, k: int) -> None:
        if self.budget is not None and self.consumed + k > self.budget:
            raise BudgetExceededError(
                f"need {k} copies with {self.consumed} consumed of budget {self.budget}"
            )

    def charge(self, k: int) -> None:
        self.require(k)
        self.consumed += k


@dataclass(frozen=True)
class SubsetState:
    """Uniform superposition over an explicit nonempty subset of {0,1}^n.

    Members are stored as table indices.  Only inner products between
    subset states are ever needed, and those are exact set arithmetic.
    """

    n: int
    members: frozenset[int]

    def __post_init__(self):
        if not self.members:
            raise ValueError("subset state must have nonempty support")
        size = 1 << self.n
        if any(not 0 <= m < size for m in self.members):
            raise ValueError("member out of range for the declared arity")

    @property
    def size(self) -> int:
        return len(self.members)

    def overlap(self, other: "SubsetState") -> float:
        """<self|other> = |A intersect B| / sqrt(|A| |B|), exact."""
        if self.n != other.n:
            raise ArityError(f"arity mismatch: {self.n} vs {other.n}")
        common = len(self.members & other.members)
        return common / math.sqrt(self.size * other.size)


def full_state(n: int) -> SubsetState:
    return SubsetState(n, frozenset(range(1 << n)))


def graph_state(f: BooleanFunction) -> SubsetState:
    """The function state of f, as the subset state of its graph {(x, f(x))}."""
    table = f.table
    return SubsetState(f.n + 1, frozenset((x << 1) | int(table[x]) for x in range(table.size)))


def appended_bit_state(s: SubsetState, b: int) -> SubsetState:
    """|s> tensor |b>, for overlaps against one-larger-arity states."""
    return SubsetState(s.n + 1, frozenset((m << 1) | (b & 1) for m in s.members))


def preimage_state(f: BooleanFunction, b: int) -> SubsetState:
    """Subset state over f^-1(b); raises if the preimage is empty."""
    support = np.flatnonzero(f.table == (b & 1))
    return SubsetState(f.n, frozenset(int(x) for x in support))


# ---------------------------------------------------------------------------
# Sampling primitives (one function-state copy each unless stated otherwise)
# ---------------------------------------------------------------------------

def sample_classical(
    f: BooleanFunction, ledger: CopyLedger, rng
) -> tuple[str, int]:
    """Measure one copy in the computational basis: uniform x and f(x)."""
    gen = as_generator(rng)
    ledger.charge(1)
    ix = int(gen.integers(0, 1 << f.n))
    return format(ix, f"0{f.n}b"), f.value(ix)


def sample_classical_batch(
    f: BooleanFunction, count: int, ledger: CopyLedger, rng
) -> tuple[np.ndarray, np.ndarray]:
    """count classical samples as (index array, value array); count copies."""
    gen = as_generator(rng)
    ledger.charge(count)
    ixs = gen.integers(0, 1 << f.n, size=count)
    return ixs, f.table[ixs]


def fourier_sample(f: BooleanFunction, ledger: CopyLedger, rng):
    """One Fourier-sampling attempt from one copy.

    Succeeds with probability exactly 1/2; on success returns the sampled
    subset as a frozenset of coordinates in 1..n, otherwise None.
    """
    gen = as_generator(rng)
    ledger.charge(1)
    if gen.random() >= 0.5:
        return None
    mask = int(walsh_transform(f).sample_masks(gen, 1)[0])
    return mask_to_coordinates(mask, f.n)


def fourier_sample_batch(
    f: BooleanFunction, copies: int, ledger: CopyLedger, rng
) -> np.ndarray:
    """Masks of the successful attempts among `copies` copies.

    The success count is Binomial(copies, 1/2) and successes carry i.i.d.
    squared-coefficient masks, identical in law to attempt-by-attempt
    simulation.
    """
    gen = as_generator(rng)
    ledger.charge(copies)
    successes = int(gen.binomial(copies, 0.5))
    return walsh_transform(f).sample_masks(gen, successes)


def fourier_sample_until(
    f: BooleanFunction, needed: int, ledger: CopyLedger, rng
) -> tuple[np.ndarray, int]:
    """Draw copies until `needed` successes; returns (masks, copies used)."""
    gen = as_generator(rng)
    copies = needed + int(gen.negative_binomial(needed, 0.5))
    ledger.charge(copies)
    return walsh_transform(f).sample_masks(gen, needed), copies


def mask_to_coordinates(mask: int, n: int) -> frozenset[int]:
    """Subset mask to coordinate set under the shared index convention."""
    return frozenset(i for i in range(1, n + 1) if mask & (1 << (n - i)))


def postselect_subset(
    f: BooleanFunction, b: int, attempts: int, ledger: CopyLedger, rng
):
    """Measure the output qubit of up to `attempts` copies, keeping the first
    copy that shows b; returns the preimage subset state or FAIL.

    Consumes the copies actually drawn (all `attempts` on FAIL).
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    gen = as_generator(rng)
    ledger.require(attempts)
    q = float(np.count_nonzero(f.table == (b & 1))) / (1 << f.n)
    if q == 0.0:
        ledger.charge(attempts)
        return FAIL
    # geometric(q) counts Bernoulli(q) trials up to and including the first
    # success; exceeding the attempt budget is the explicit failure branch
    drawn = int(gen.geometric(q))
    if drawn > attempts:
        ledger.charge(attempts)
        return FAIL
    ledger.charge(drawn)
    return preimage_state(f, b)


def draw_preimage_point(
    f: BooleanFunction, b: int, attempts: int, ledger: CopyLedger, rng
):
    """Like postselect_subset, but measures the input register too: returns
    a uniform element of f^-1(b) as a table index, or FAIL."""
    gen = as_generator(rng)
    state = postselect_subset(f, b, attempts, ledger, gen)
    if state is FAIL:
        return FAIL
    members = sorted(state.members)
    return members[int(gen.integers(0, len(members)))]


def swap_test(a: SubsetState, b: SubsetState, rng) -> int:
    """One swap test: accepts (returns 1) with probability (1+<a|b>^2)/2."""
    gen = as_generator(rng)
    ov = a.overlap(b)
    return int(gen.random() < 0.5 * (1.0 + ov * ov))


def overlap_sample_count(eps: float, delta: float) -> int:
    """Swap tests needed for an eps-accurate overlap estimate at confidence delta."""
    return math.ceil(2.0 * math.log(2.0 / delta) / eps**4)


def estimate_overlap(
    a: SubsetState, b: SubsetState, eps: float, delta: float, rng
) -> float:
    """Estimate |<a|b>| from m = ceil(2 ln(2/delta) / eps^4) swap tests.

    Returns sqrt(max(0, 2(o_hat - 1/2))); the clamp keeps the estimate in
    [0, 1] when sampling noise pushes the radicand negative.  The accept
    count is drawn in one binomial batch.
    """
    _check_params(eps, delta)
    gen = as_generator(rng)
    m = overlap_sample_count(eps, delta)
    ov = a.overlap(b)
    accepts = int(gen.binomial(m, 0.5 * (1.0 + ov * ov)))
    o_hat = accepts / m
    return math.sqrt(max(0.0, 2.0 * (o_hat - 0.5)))


def joint_membership_sample_count(eps: float, delta: float) -> int:
    """Swap tests per overlap inside the three-factor joint estimate."""
    return math.ceil(162.0 * math.log(6.0 / delta) / eps**4)


def estimate_joint_membership(
    f: BooleanFunction,
    f2: BooleanFunction,
    eps: float,
    delta: float,
    ledger: CopyLedger,
    rng,
    *,
    shifts: tuple | None = None,
    b: int = 1,
    b2: int = 1,
    postselect_attempts: int | None = None,
):
    """Estimate Pr_x[f(x)=b and f2(x)=b2] as beta * alpha * alpha'.

    Composes three overlap estimates at accuracy eps/3 and confidence
    delta/3 each: function state against each post-selected preimage state
    (the alphas) and the two preimage states against each other (beta).
    Preimage states are prepared here by post-selection; FAIL propagates.
    Optional shifts (y, y2) replace f, f2 by x -> f(x xor y) etc.
    """
    _check_params(eps, delta)
    if f.n != f2.n:
        raise ArityError(f"arity mismatch: {f.n} vs {f2.n}")
    gen = as_generator(rng)
    if shifts is not None:
        y, y2 = shifts
        f = shift_function(f, y) if y is not None else f
        f2 = shift_function(f2, y2) if y2 is not None else f2
    m_ov = joint_membership_sample_count(eps, delta)
    attempts = postselect_attempts
    if attempts is None:
        attempts = math.ceil(math.log(2 * m_ov / (delta / 3.0)) / eps)

    sub = postselect_subset(f, b, attempts, ledger, gen)
    if sub is FAIL:
        return FAIL
    sub2 = postselect_subset(f2, b2, attempts, ledger, gen)
    if sub2 is FAIL:
        return FAIL

    # the two alpha estimates each consume m_ov fresh function-state copies
    ledger.charge(m_ov)
    alpha = estimate_overlap(graph_state(f), appended_bit_state(sub, b), eps / 3.0, delta / 3.0, gen)
    ledger.charge(m_ov)
    alpha2 = estimate_overlap(graph_state(f2), appended_bit_state(sub2, b2), eps / 3.0, delta / 3.0, gen)
    beta = estimate_overlap(sub, sub2, eps / 3.0, delta / 3.0, gen)
    return beta * alpha * alpha2


def symmetric_subspace_measure(f: BooleanFunction, ledger: CopyLedger, rng) -> int:
    """Two-outcome symmetric-subspace measurement on one copy.

    Returns 1 (the symmetric-subspace outcome) with probability
    Pr_{x,pi}[f(x) = f(pi(x))], computed from the weight-class closed form.
    """
    gen = as_generator(rng)
    ledger.charge(1)
    accept = 1.0 - float(symmetry_violation_fraction(f))
    return int(gen.random() < accept)


def symmetric_subspace_measure_batch(
    f: BooleanFunction, count: int, ledger: CopyLedger, rng
) -> int:
    """Number of accepts among `count` measurements (one binomial draw)."""
    gen = as_generator(rng)
    ledger.charge(count)
    accept = 1.0 - float(symmetry_violation_fraction(f))
    return int(gen.binomial(count, accept))


# ---------------------------------------------------------------------------
# Function transforms modelling in-superposition unitaries
# ---------------------------------------------------------------------------

def shift_function(f: BooleanFunction, y) -> BooleanFunction:
    """x -> f(x xor y); models the register shift |x> -> |x + y|."""
    ix = index_of(y, f.n) if not isinstance(y, (int, np.integer)) else int(y)
    if not 0 <= ix < (1 << f.n):
        raise ArityError(f"shift {y!r} out of range for n={f.n}")
    idx = np.arange(1 << f.n) ^ ix
    return BooleanFunction(f.table[idx])


def ip_transform(f: BooleanFunction) -> BooleanFunction:
    """(x, y) -> f(x, y) xor <x, y>; models the output-register update."""
    if f.n % 2:
        raise ArityError(f"ip_transform needs even arity, got {f.n}")
    return BooleanFunction(f.table ^ inner_product_table(f.n))


def _check_params(eps: float, delta: float) -> None:
    if not (0.0 < eps < 1.0 and 0.0 < delta < 1.0):
        raise ValueError(f"parameters must lie in (0,1), got eps={eps}, delta={delta}")
