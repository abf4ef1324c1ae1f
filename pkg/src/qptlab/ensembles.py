"""Hard-instance generators: layer matchings with their paired twin
functions, low-bias inner-product-plus-h constructions and their duals, and
random set triples, each with exact certification of the promised structure.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boolfn import (
    BooleanFunction,
    builtin,
    is_monotone,
    save_table,
    load_table,
    to_hex,
    weights,
)
from .errors import ArityError, CapabilityError, TheoremViolationError
from .qstate import as_generator

MONOTONE_CHECK_MAX_ARITY = 12


def _is_below(u: int, v: int) -> bool:
    """u <= v in the bitwise partial order."""
    return (u & ~v) == 0


@dataclass(frozen=True)
class Matching:
    """Pairs (u < v) drawn from the two middle layers of the hypercube.

    Endpoints are table indices; u has weight ceil(n/2)-1 and v weight
    ceil(n/2).  Construction-time verification enforces: all endpoints
    distinct, u strictly below v in each pair, no cross-pair comparability,
    and an even pair count.
    """

    n: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        verify_matching(self)

    @property
    def achieved_m(self) -> int:
        return len(self.pairs)

    @property
    def epsilon(self) -> float:
        """Fraction of inputs covered by half the matching: m / 2^n."""
        return len(self.pairs) / (1 << self.n)

    def union(self) -> frozenset[int]:
        return frozenset(e for p in self.pairs for e in p)


def verify_matching(matching: Matching) -> None:
    """Exhaustive O(m^2) check of the matching invariants; raises loudly."""
    n, pairs = matching.n, matching.pairs
    if n < 2:
        raise ValueError(f"matching needs n >= 2, got {n}")
    if len(pairs) % 2:
        raise TheoremViolationError("matching size must be even")
    k = (n + 1) // 2
    w = weights(n)
    seen: set[int] = set()
    for (u, v) in pairs:
        if int(w[u]) != k - 1 or int(w[v]) != k:
            raise TheoremViolationError(f"pair ({u}, {v}) not in layers {k-1}/{k}")
        if not (_is_below(u, v) and u != v):
            raise TheoremViolationError(f"pair ({u}, {v}) is not an increasing pair")
        if u in seen or v in seen:
            raise TheoremViolationError("matching endpoints are not distinct")
        seen.add(u)
        seen.add(v)
    for i, (ui, vi) in enumerate(pairs):
        for j, (uj, vj) in enumerate(pairs):
            if i != j and _is_below(ui, vj):
                raise TheoremViolationError(
                    f"cross comparability between pair {i} and pair {j}"
                )


def build_layer_matching(n: int, target_m: int, rng) -> Matching:
    """Greedy randomized matching over the two middle layers.

    Candidate pairs (u, u + e_b) are drawn at random and kept only when
    they stay incomparable to everything chosen so far; the result is
    verified exhaustively.  achieved_m <= target_m and may fall short at
    small n; it is always even.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if target_m < 0 or target_m % 2:
        raise ValueError(f"target_m must be even and nonnegative, got {target_m}")
    gen = as_generator(rng)
    k = (n + 1) // 2
    w = weights(n)
    lower = [ix for ix in range(1 << n) if int(w[ix]) == k - 1]
    edges = [(u, u | (1 << b)) for u in lower for b in range(n) if not u & (1 << b)]
    chosen: list[tuple[int, int]] = []
    used: set[int] = set()
    for ei in gen.permutation(len(edges)):
        if len(chosen) >= target_m:
            break
        u, v = edges[ei]
        if u in used or v in used:
            continue
        if any(_is_below(u, vj) or _is_below(uj, v) for (uj, vj) in chosen):
            continue
        chosen.append((u, v))
        used.add(u)
        used.add(v)
    if len(chosen) % 2:
        chosen.pop()
    return Matching(n, tuple(chosen))


# ---------------------------------------------------------------------------
# Twin functions over a matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwinFunction:
    """One draw from a twin family: the function plus its bipartition."""

    base: BooleanFunction
    variant: int
    pairs_one: tuple[tuple[int, int], ...]  # pairs assigned value pattern A
    pairs_zero: tuple[tuple[int, int], ...]  # pairs assigned value pattern B

    @property
    def b_size(self) -> int:
        return len(self.pairs_zero)


def background_table(n: int) -> np.ndarray:
    """The majority-threshold background: 1 iff |x| >= n/2."""
    return (2 * weights(n) >= n).astype(np.uint8)


def twin_table(matching: Matching, variant: int, in_a: Sequence[bool]) -> BooleanFunction:
    """Deterministic twin function for an explicit bipartition.

    Variant 0 writes (1, 1) on pairs in A and (0, 0) on pairs in B; variant
    1 writes (1, 0) on A and (0, 1) on B.  Off the matching, the background
    threshold function applies.
    """
    if variant not in (0, 1):
        raise ValueError(f"variant must be 0 or 1, got {variant}")
    if len(in_a) != matching.achieved_m:
        raise ValueError("bipartition length does not match the matching")
    table = background_table(matching.n).copy()
    for (u, v), a_side in zip(matching.pairs, in_a):
        if variant == 0:
            table[u] = table[v] = 1 if a_side else 0
        else:
            table[u], table[v] = (1, 0) if a_side else (0, 1)
    return BooleanFunction(table)


def sample_twin(matching: Matching, variant: int, rng) -> TwinFunction:
    """Uniform bipartition draw; variant-0 draws are checked monotone."""
    gen = as_generator(rng)
    flags = gen.random(matching.achieved_m) < 0.5
    f = twin_table(matching, variant, flags.tolist())
    if variant == 0 and matching.n <= MONOTONE_CHECK_MAX_ARITY and not is_monotone(f):
        raise TheoremViolationError("variant-0 twin draw is not monotone")
    pairs_one = tuple(p for p, a in zip(matching.pairs, flags) if a)
    pairs_zero = tuple(p for p, a in zip(matching.pairs, flags) if not a)
    return TwinFunction(base=f, variant=variant, pairs_one=pairs_one, pairs_zero=pairs_zero)


# ---------------------------------------------------------------------------
# Low-bias inner-product families
# ---------------------------------------------------------------------------

def bias(f: BooleanFunction) -> float:
    """E_x[(-1)^f(x)], exact."""
    ones = int(np.count_nonzero(f.table))
    return 1.0 - 2.0 * ones / (1 << f.n)


def sample_low_bias_h(n: int, rng) -> tuple[BooleanFunction, int]:
    """Rejection-sample an n-bit h with |bias| <= 2^(-n/3).

    Returns (h, number of rejected draws); acceptance is overwhelming for
    n >= 3 by a Chernoff bound on the binomial bias.
    """
    if n < 3:
        raise ValueError(f"low-bias sampling needs n >= 3, got {n}")
    gen = as_generator(rng)
    bound = 2.0 ** (-n / 3.0)
    rejections = 0
    while True:
        h = BooleanFunction((gen.random(1 << n) < 0.5).astype(np.uint8))
        if abs(bias(h)) <= bound:
            return h, rejections
        rejections += 1


def balanced_h(n: int, rng) -> BooleanFunction:
    """Uniform exactly-balanced n-bit function (bias exactly 0)."""
    gen = as_generator(rng)
    table = np.zeros(1 << n, dtype=np.uint8)
    table[: 1 << (n - 1)] = 1
    gen.shuffle(table)
    return BooleanFunction(table)


def sample_mm_pair(n: int, which: str, rng) -> BooleanFunction:
    """One 2n-bit draw: <x,y> + h(x) for F1, or the dual <x,y> + h(y) for F2,
    with h rejection-sampled to bias at most 2^(-n/3)."""
    if which not in ("F1", "F2"):
        raise ValueError(f"which must be 'F1' or 'F2', got {which!r}")
    gen = as_generator(rng)
    h, _ = sample_low_bias_h(n, gen)
    return builtin("mm" if which == "F1" else "mm_dual", h=h)


def mm_distance_lower_bound(h: BooleanFunction) -> float:
    """Certified distance of <x,y> + h(y) from every <x,y> + h'(x).

    The correlation with any member is bias(h) * bias(h'), so the distance
    is at least (1 - |bias(h)|) / 2; exactly 1/2 when h is balanced.
    """
    return 0.5 * (1.0 - abs(bias(h)))


# ---------------------------------------------------------------------------
# Set triples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SetTriple:
    """Three subsets of {0,1}^n as membership arrays; xor mode forces C = A xor B."""

    n: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    mode: str = "independent"

    def __post_init__(self):
        size = 1 << self.n
        for arr in (self.a, self.b, self.c):
            if arr.dtype != bool or arr.size != size:
                raise ValueError("membership arrays must be boolean of length 2^n")
        if self.mode not in ("independent", "xor"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "xor" and not np.array_equal(self.c, self.a ^ self.b):
            raise TheoremViolationError("xor-mode triple has c != a xor b")

    def intersection_size(self) -> int:
        return int(np.count_nonzero(self.a & self.b & self.c))

    def intersection_density(self) -> float:
        return self.intersection_size() / (1 << self.n)


def sample_set_triple(n: int, mode: str, rng) -> SetTriple:
    """A, B uniform subsets; C uniform (independent) or A xor B (xor)."""
    gen = as_generator(rng)
    size = 1 << n
    a = gen.random(size) < 0.5
    b = gen.random(size) < 0.5
    if mode == "xor":
        c = a ^ b
    elif mode == "independent":
        c = gen.random(size) < 0.5
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return SetTriple(n=n, a=a, b=b, c=c, mode=mode)


def triple_function(st: SetTriple) -> BooleanFunction:
    """The (n+2)-bit selector encoding of the triple."""
    return builtin("triple", st.n, a=st.a, b=st.b, c=st.c)


def certify_separation(
    f0s: Sequence[BooleanFunction], f1s: Sequence[BooleanFunction]
) -> float:
    """Minimum pairwise normalized Hamming distance across the two sets."""
    if not f0s or not f1s:
        raise ValueError("both sample sets must be nonempty")
    n = f0s[0].n
    for f in list(f0s) + list(f1s):
        if f.n != n:
            raise ArityError("sample sets mix arities")
    t0 = np.stack([f.table for f in f0s]).astype(np.int16)
    t1 = np.stack([f.table for f in f1s]).astype(np.int16)
    dists = np.abs(t0[:, None, :] - t1[None, :, :]).sum(axis=2)
    return float(dists.min()) / (1 << n)


# ---------------------------------------------------------------------------
# Serialization: hex tables plus a JSON sidecar
# ---------------------------------------------------------------------------

def save_ensemble(directory, functions: Sequence[BooleanFunction], meta: dict) -> None:
    """Write each function as NNN.hex plus ensemble.json describing the draw."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for i, f in enumerate(functions):
        name = f"{i:03d}.hex"
        save_table(os.path.join(directory, name), f)
        files.append(name)
    sidecar = dict(meta)
    sidecar["files"] = files
    with open(os.path.join(directory, "ensemble.json"), "w", encoding="ascii") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_ensemble(directory) -> tuple[list[BooleanFunction], dict]:
    with open(os.path.join(directory, "ensemble.json"), "r", encoding="ascii") as fh:
        meta = json.load(fh)
    functions = [load_table(os.path.join(directory, name)) for name in meta["files"]]
    return functions, meta
