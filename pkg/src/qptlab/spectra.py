"""Dense state-vector and density-matrix machinery for the distinguishability
analysis: brute-force difference matrices over twin ensembles, compatibility
combinatorics with their exact counting formulas, trace norms via an in-house
Jacobi eigensolver, optimal-discrimination success, and the distinct-subspace
checks for the set-triple ensembles.

Every closed form here has an independent enumeration oracle next to it; the
test suite drives the pairs against each other.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .boolfn import BooleanFunction, index_of, weights
from .ensembles import Matching, SetTriple, background_table, twin_table
from .errors import (
    CapabilityError,
    ContractError,
    InternalConsistencyError,
    TheoremViolationError,
)
from .qstate import as_generator

DEFAULT_DIM_CAP = 4096
DIM_CAP_ENV = "QPT_DIM_CAP"

# above this dimension trace_norm switches from the in-house Jacobi sweep
# to LAPACK; both backends are cross-checked in the tests
JACOBI_AUTO_LIMIT = 600

JACOBI_OFF_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60
RECONSTRUCTION_TOL = 1e-9
SYMMETRY_TOL = 1e-9


def dim_cap(override: int | None = None) -> int:
    if override is not None:
        return override
    env = os.environ.get(DIM_CAP_ENV)
    return int(env) if env else DEFAULT_DIM_CAP


def _check_dim(dim: int, cap: int | None) -> None:
    limit = dim_cap(cap)
    if dim > limit:
        raise CapabilityError(
            f"dimension {dim} exceeds the cap {limit} (set {DIM_CAP_ENV} to override)"
        )


# ---------------------------------------------------------------------------
# States and density matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateVector:
    """Dense real state vector, unit norm within 1e-10."""

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.amplitudes, dtype=np.float64)
        norm2 = float(np.dot(arr, arr))
        if abs(norm2 - 1.0) > 1e-10:
            raise ValueError(f"state vector has squared norm {norm2}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True)
class DensityMatrix:
    """Dense real symmetric matrix with a declared trace (1 for states, 0
    for differences).  Positivity of state averages is asserted in tests,
    not on construction."""

    entries: np.ndarray
    declared_trace: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("density matrix must be square")
        if float(np.max(np.abs(arr - arr.T), initial=0.0)) > 1e-12:
            raise ValueError("density matrix must be symmetric within 1e-12")
        tr = float(np.trace(arr))
        if abs(tr - self.declared_trace) > 1e-10:
            raise ValueError(f"trace {tr} differs from declared {self.declared_trace}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def phase_state(f: BooleanFunction, cap: int | None = None) -> StateVector:
    """Amplitudes (-1)^f(x) / sqrt(2^n)."""
    dim = 1 << f.n
    _check_dim(dim, cap)
    signs = 1.0 - 2.0 * f.table.astype(np.float64)
    return StateVector(signs / math.sqrt(dim))


def function_state(f: BooleanFunction, cap: int | None = None) -> StateVector:
    """The 2^(n+1)-dimensional embedding with amplitude on (x, f(x)) only."""
    dim = 1 << (f.n + 1)
    _check_dim(dim, cap)
    amp = np.zeros(dim, dtype=np.float64)
    xs = np.arange(1 << f.n)
    amp[2 * xs + f.table] = 1.0 / math.sqrt(1 << f.n)
    return StateVector(amp)


def hadamard_on_output(state: StateVector) -> StateVector:
    """Hadamard on the least significant (output) qubit."""
    amp = state.amplitudes.reshape(-1, 2)
    out = np.empty_like(amp)
    out[:, 0] = (amp[:, 0] + amp[:, 1]) / math.sqrt(2.0)
    out[:, 1] = (amp[:, 0] - amp[:, 1]) / math.sqrt(2.0)
    return StateVector(out.reshape(-1))


def output_gated_function(f: BooleanFunction) -> BooleanFunction:
    """(x, b) -> b * f(x) on n+1 bits; the phase-state partner of the
    function state under hadamard_on_output."""
    table = np.zeros(1 << (f.n + 1), dtype=np.uint8)
    table[2 * np.arange(1 << f.n) + 1] = f.table
    return BooleanFunction(table)


def tensor_power(state: StateVector, t: int) -> np.ndarray:
    w = state.amplitudes
    for _ in range(t - 1):
        w = np.kron(w, state.amplitudes)
    return w


def ensemble_average(states: Sequence[StateVector], t: int, cap: int | None = None) -> DensityMatrix:
    """Exact average of t-fold tensor-power projectors."""
    if not states:
        raise ValueError("need at least one state")
    d = states[0].dimension
    if any(s.dimension != d for s in states):
        raise ValueError("states must share a dimension")
    big = d**t
    _check_dim(big, cap)
    w_rows = np.stack([tensor_power(s, t) for s in states])
    entries = w_rows.T @ w_rows / len(states)
    return DensityMatrix(entries, declared_trace=1.0)


# ---------------------------------------------------------------------------
# Eigensolver and trace norms
# ---------------------------------------------------------------------------

def jacobi_eigh(
    matrix: np.ndarray,
    off_tol: float = JACOBI_OFF_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a dense symmetric matrix.

    Sweeps until the off-diagonal Frobenius mass falls below off_tol, then
    verifies the reconstruction Q diag(w) Q^T against the input.  Returns
    (eigenvalues, orthogonal Q), eigenvalues unsorted.
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    q = np.eye(n)
    skip_below = off_tol / max(2 * n, 2)
    for _ in range(max_sweeps):
        # off-diagonal mass summed directly: the subtraction form
        # sum(a^2) - sum(diag^2) cancels catastrophically near convergence
        strict = a.copy()
        np.fill_diagonal(strict, 0.0)
        if math.sqrt(float(np.sum(strict * strict))) <= off_tol:
            break
        for p in range(n - 1):
            row = a[p, p + 1 :]
            if not np.any(np.abs(row) > skip_below):
                continue
            for r in range(p + 1, n):
                apq = a[p, r]
                if abs(apq) <= skip_below:
                    continue
                theta = (a[r, r] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[r, :].copy()
                a[p, :] = c * rp - s * rq
                a[r, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, r].copy()
                a[:, p] = c * cp - s * cq
                a[:, r] = s * cp + c * cq
                qp = q[:, p].copy()
                qq = q[:, r].copy()
                q[:, p] = c * qp - s * qq
                q[:, r] = s * qp + c * qq
    else:
        raise InternalConsistencyError("Jacobi sweep did not converge")
    evals = np.diag(a).copy()
    recon = (q * evals) @ q.T
    err = float(np.linalg.norm(recon - matrix))
    scale = max(1.0, float(np.linalg.norm(matrix)))
    if err > RECONSTRUCTION_TOL * scale:
        raise InternalConsistencyError(f"eigendecomposition reconstruction error {err}")
    return evals, q


def _entries_of(matrix) -> np.ndarray:
    return matrix.entries if isinstance(matrix, DensityMatrix) else np.asarray(matrix, dtype=np.float64)


def trace_norm(matrix, method: str = "auto") -> float:
    """Sum of absolute eigenvalues of a symmetric matrix.

    method: "jacobi" (in-house sweep with reconstruction check), "lapack",
    or "auto" (Jacobi up to dimension 600, LAPACK beyond).
    """
    a = _entries_of(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError("trace_norm needs a square matrix")
    asym = float(np.max(np.abs(a - a.T), initial=0.0))
    if asym > SYMMETRY_TOL:
        raise ContractError(f"matrix is not symmetric: max asymmetry {asym}")
    if method == "auto":
        method = "jacobi" if a.shape[0] <= JACOBI_AUTO_LIMIT else "lapack"
    if method == "jacobi":
        evals, _ = jacobi_eigh(a)
    elif method == "lapack":
        evals = np.linalg.eigvalsh(a)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.sum(np.abs(evals)))


def helstrom_success(rho0, rho1, method: str = "auto") -> float:
    """Optimal success probability of distinguishing two equiprobable states:
    1/2 + ||rho0 - rho1||_1 / 4, clamped to [1/2, 1]."""
    a = _entries_of(rho0)
    b = _entries_of(rho1)
    if a.shape != b.shape:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")
    val = 0.5 + trace_norm(a - b, method=method) / 4.0
    return min(1.0, max(0.5, val))


# ---------------------------------------------------------------------------
# Index-tuple combinatorics over a matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TupleStats:
    """Greedy pair-extraction statistics of an index multiset."""

    pair_parity: int
    odd_singletons: frozenset[int]
    touched_pairs: frozenset[tuple[int, int]]


def _normalize_entries(entries: Iterable, n: int) -> tuple[int, ...]:
    out = []
    for e in entries:
        out.append(index_of(e, n) if isinstance(e, str) else int(e))
    return tuple(out)


def tuple_stats(entries: Iterable, matching: Matching) -> TupleStats:
    """Unique partition of the multiset into extracted pairs, leftover
    matching endpoints, and elements off the matching.

    pair_parity is the number of extracted full pairs mod 2; odd_singletons
    are the endpoints with an odd leftover count; touched_pairs are the
    matching pairs meeting odd_singletons.
    """
    xs = _normalize_entries(entries, matching.n)
    counts = Counter(xs)
    parity = 0
    sing: set[int] = set()
    for (u, v) in matching.pairs:
        cu, cv = counts.get(u, 0), counts.get(v, 0)
        k = min(cu, cv)
        parity += k
        if (cu - k) % 2:
            sing.add(u)
        if (cv - k) % 2:
            sing.add(v)
    touched = frozenset(p for p in matching.pairs if p[0] in sing or p[1] in sing)
    return TupleStats(parity % 2, frozenset(sing), touched)


def cross_pair_count(stats_x: TupleStats, stats_y: TupleStats, matching: Matching) -> int:
    """Number of matching pairs contained in the union of the two singleton
    sets, mod 2."""
    union = stats_x.odd_singletons | stats_y.odd_singletons
    return sum(1 for (u, v) in matching.pairs if u in union and v in union) % 2


def compatible(x: Iterable, y: Iterable, matching: Matching) -> bool:
    """True iff the two index tuples index a nonzero difference-matrix entry.

    Characterization route: equal touched pairs and odd total pair count
    (pair parities plus cross pairs).  The direct endpoint-parity route in
    build_difference_matrix is the independent counterpart.
    """
    sx = tuple_stats(x, matching)
    sy = tuple_stats(y, matching)
    return _compatible_stats(sx, sy, matching)


def _compatible_stats(sx: TupleStats, sy: TupleStats, matching: Matching) -> bool:
    if sx.touched_pairs != sy.touched_pairs:
        return False
    total = sx.pair_parity + sy.pair_parity + cross_pair_count(sx, sy, matching)
    return total % 2 == 1


def decode_tuple(index: int, n: int, t: int) -> tuple[int, ...]:
    """Flat row index to its t table-index digits, first digit most significant."""
    mask = (1 << n) - 1
    return tuple((index >> (n * (t - 1 - j))) & mask for j in range(t))


def _tuple_parities_and_signs(matching: Matching, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-tuple endpoint-parity bitmasks (u_i at bit 2i, v_i at 2i+1) and
    background signs prod_j (-1)^(g at off-matching digits)."""
    n = matching.n
    dim = 1 << (n * t)
    endpoint_code = np.full(1 << n, -1, dtype=np.int64)
    for i, (u, v) in enumerate(matching.pairs):
        endpoint_code[u] = 2 * i
        endpoint_code[v] = 2 * i + 1
    g = background_table(n).astype(np.int64)
    sign_table = np.where(endpoint_code >= 0, 1, 1 - 2 * g)
    idx = np.arange(dim, dtype=np.int64)
    par = np.zeros(dim, dtype=np.int64)
    sign = np.ones(dim, dtype=np.int64)
    mask = (1 << n) - 1
    for j in range(t):
        digit = (idx >> (n * (t - 1 - j))) & mask
        code = endpoint_code[digit]
        par ^= np.where(code >= 0, 1 << np.maximum(code, 0), 0)
        sign *= sign_table[digit]
    return par, sign


def build_difference_matrix(matching: Matching, t: int, cap: int | None = None) -> DensityMatrix:
    """Entrywise construction of the twin-ensemble t-copy difference matrix.

    Entry (x, y) is 2 s(x u y) / 2^(nt) when every matching pair has equal
    endpoint parities in the combined multiset and the number of pairs with
    both parities odd is itself odd; 0 otherwise.  s carries the background
    signs of the digits off the matching.
    """
    n = matching.n
    m = matching.achieved_m
    dim = 1 << (n * t)
    _check_dim(dim, cap)
    if 2 * m > 62:
        raise CapabilityError("parity masks support at most 31 matching pairs")
    par, sign = _tuple_parities_and_signs(matching, t)
    mask_u = sum(1 << (2 * i) for i in range(m))
    combined = par[:, None] ^ par[None, :]
    qu = combined & mask_u
    qv = (combined >> 1) & mask_u
    cond = (qu == qv) & (np.bitwise_count(qu.astype(np.uint64)) % 2 == 1)
    entries = np.where(cond, 2.0 / dim, 0.0) * sign[:, None] * sign[None, :]
    return DensityMatrix(entries, declared_trace=0.0)


def twin_phase_states(matching: Matching, variant: int, cap: int | None = None) -> list[StateVector]:
    """Phase states of the twin family over all 2^m bipartitions."""
    m = matching.achieved_m
    if m > 16:
        raise CapabilityError(f"bipartition enumeration supports m <= 16, got {m}")
    _check_dim(1 << matching.n, cap)
    states = []
    for code in range(1 << m):
        flags = [bool(code >> i & 1) for i in range(m)]
        f = twin_table(matching, variant, flags)
        states.append(phase_state(f, cap=cap))
    return states


def twin_difference_bruteforce(matching: Matching, t: int, cap: int | None = None) -> DensityMatrix:
    """Independent oracle: averaged tensor powers over all bipartitions."""
    e0 = ensemble_average(twin_phase_states(matching, 0, cap), t, cap)
    e1 = ensemble_average(twin_phase_states(matching, 1, cap), t, cap)
    return DensityMatrix(e0.entries - e1.entries, declared_trace=0.0)


# ---------------------------------------------------------------------------
# Exact counting formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountParams:
    """Alphabet of 2^n symbols, m of them designated as disjoint pairs."""

    n: int
    m: int

    def __post_init__(self):
        if self.m < 0 or 2 * self.m > (1 << self.n):
            raise ValueError(f"need 0 <= 2m <= 2^n, got n={self.n}, m={self.m}")

    @classmethod
    def from_matching(cls, matching: Matching) -> "CountParams":
        return cls(matching.n, matching.achieved_m)


def _exact_div(num: int, denom_pow2: int, what: str) -> int:
    q, r = divmod(num, 1 << denom_pow2)
    if r:
        raise InternalConsistencyError(f"{what}: sum {num} not divisible by 2^{denom_pow2}")
    return q


def odd_pair_string_count(params: CountParams, t: int, p: int) -> int:
    """Strings of length t where p designated pairs occur all-odd, the other
    m - p pairs all-even, and free symbols arbitrarily.  Exact integer via
    the alternating binomial sum."""
    if not 0 <= p <= params.m:
        raise ValueError(f"p must lie in 0..{params.m}, got {p}")
    size = 1 << params.n
    a, b = 2 * (params.m - p), 2 * p
    total = 0
    for j in range(a + 1):
        cj = math.comb(a, j)
        for k in range(b + 1):
            term = cj * math.comb(b, k) * (size - 2 * j - 2 * k) ** t
            total += -term if k % 2 else term
    return _exact_div(total, 2 * params.m, "odd_pair_string_count")


def type_class_size(params: CountParams, t: int, p: int) -> int:
    """Strings of length t where p designated pairs have exactly one symbol
    odd, and the remaining pairs have equal parities.  Counts a whole
    compatibility class of touched-pair cardinality p."""
    if not 0 <= p <= params.m:
        raise ValueError(f"p must lie in 0..{params.m}, got {p}")
    size = 1 << params.n
    total = 0
    for j in range(p + 1):
        cj = math.comb(p, j)
        for k in range(params.m - p + 1):
            term = cj * math.comb(params.m - p, k) * (size - 4 * j - 4 * k) ** t
            total += -term if j % 2 else term
    return _exact_div(total, params.m, "type_class_size")


def empty_type_size(params: CountParams, t: int) -> int:
    """Strings where every pair has equal parities: the empty-type class."""
    size = 1 << params.n
    total = sum(math.comb(params.m, k) * (size - 4 * k) ** t for k in range(params.m + 1))
    return _exact_div(total, params.m, "empty_type_size")


def empty_type_split(params: CountParams, t: int) -> tuple[int, int]:
    """The empty-type class split by extracted-pair parity: (odd, even).

    Cross-checked against empty_type_size; a mismatch raises."""
    limit = min(params.m, t)
    x1 = sum(
        math.comb(params.m, p) * odd_pair_string_count(params, t, p)
        for p in range(1, limit + 1, 2)
    )
    x2 = sum(
        math.comb(params.m, p) * odd_pair_string_count(params, t, p)
        for p in range(0, limit + 1, 2)
    )
    if x1 + x2 != empty_type_size(params, t):
        raise InternalConsistencyError("empty-type split disagrees with its total")
    return x1, x2


def distinguishability_star_term(params: CountParams, t: int) -> float:
    """The touched-type contribution to the difference trace norm:
    2 (1 - E_K[(1 - 4K/2^n)^t]) with K binomial(m, 1/2).

    Evaluated exactly both as that expectation and as the weighted
    type-class sum; the two must agree as rationals."""
    nt_pow = params.n * t
    via_total = 2 * (1 - Fraction(empty_type_size(params, t), 1 << nt_pow))
    class_sum = sum(
        math.comb(params.m, k) * type_class_size(params, t, k)
        for k in range(1, min(params.m, t) + 1)
    )
    via_classes = Fraction(class_sum, 1 << max(nt_pow - 1, 0))
    if nt_pow == 0:
        via_classes = Fraction(class_sum * 2)
    if via_total != via_classes:
        raise InternalConsistencyError("star term evaluations disagree")
    return float(via_total)


def _sqrt_ratio(a: int, pow2: int) -> float:
    """sqrt(a) / 2^pow2 for a big nonnegative integer a."""
    if a == 0:
        return 0.0
    r = math.isqrt(a << 128)
    return float(Fraction(r, 1 << (64 + pow2)))


def closed_form_trace_norm(params: CountParams, t: int) -> float:
    """Trace norm of the twin-ensemble difference matrix from the counting
    formulas: 2 sqrt(x1 x2) / 2^(nt-1) plus the star term."""
    x1, x2 = empty_type_split(params, t)
    geometric = 2.0 * _sqrt_ratio(x1 * x2, params.n * t - 1)
    return geometric + distinguishability_star_term(params, t)


# ---------------------------------------------------------------------------
# Component census
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CensusRow:
    """Aggregate of all compatibility components with a given touched-pair
    cardinality: their number and their common bipartition part sizes."""

    type_size: int
    components: int
    part_sizes: tuple[int, int]


def component_census(matching: Matching, t: int, cap: int | None = None) -> list[CensusRow]:
    """Exhaustive compatibility-class census of all index tuples.

    Groups tuples by touched pairs, splits each class into the two sides of
    its compatibility graph, and verifies the graph is complete bipartite;
    any structural violation raises TheoremViolationError.
    """
    n = matching.n
    m = matching.achieved_m
    dim = 1 << (n * t)
    _check_dim(dim, cap)
    stats = [tuple_stats(decode_tuple(i, n, t), matching) for i in range(dim)]

    classes: dict[frozenset, list[int]] = {}
    for i, s in enumerate(stats):
        classes.setdefault(s.touched_pairs, []).append(i)

    expected_components = sum(math.comb(m, k) for k in range(min(t, m) + 1))
    if len(classes) != expected_components:
        raise TheoremViolationError(
            f"found {len(classes)} components, expected {expected_components}"
        )

    rows: dict[int, list[tuple[int, int]]] = {}
    for touched, members in classes.items():
        ref = stats[members[0]]
        side_a = [i for i in members if _compatible_stats(ref, stats[i], matching)]
        side_b = [i for i in members if not _compatible_stats(ref, stats[i], matching)]
        set_a = set(side_a)
        for i in members:
            for j in members:
                edge = _compatible_stats(stats[i], stats[j], matching)
                crossing = (i in set_a) != (j in set_a)
                if edge != crossing:
                    raise TheoremViolationError(
                        "compatibility class is not complete bipartite"
                    )
        sizes = (len(side_b), len(side_a))
        rows.setdefault(len(touched), []).append(sizes)

    out = []
    for k in sorted(rows):
        sizes_list = rows[k]
        canon = {tuple(sorted(s, reverse=True)) for s in sizes_list}
        if k >= 1 and len(canon) != 1:
            raise TheoremViolationError(f"type size {k} components have unequal parts")
        out.append(CensusRow(type_size=k, components=len(sizes_list), part_sizes=canon.pop()))
    return out


# ---------------------------------------------------------------------------
# Set-triple ensemble averages and the distinct-subspace check
# ---------------------------------------------------------------------------

def _triple_amplitude_rows(n: int, xor_mode: bool) -> np.ndarray:
    """Function-state amplitude vectors for every subset triple, one per row.

    Full enumeration: 2^(3 2^n) triples (or 2^(2 2^n) pairs in xor mode),
    so this oracle path is capped at n <= 2.
    """
    if n > 2:
        raise CapabilityError(f"full triple enumeration supports n <= 2, got {n}")
    size = 1 << n
    dim = 1 << (n + 3)
    z = np.arange(1 << (n + 2))
    x = z >> 2
    sel = z & 3
    amp = 1.0 / math.sqrt(1 << (n + 2))
    masks_count = 1 << size

    def f_bits(a_mask: int, b_mask: int, c_mask: int) -> np.ndarray:
        table = np.zeros(z.size, dtype=np.int64)
        table[sel == 0] = (a_mask >> x[sel == 0]) & 1
        table[sel == 1] = (b_mask >> x[sel == 1]) & 1
        table[sel == 2] = (c_mask >> x[sel == 2]) & 1
        return table

    rows = []
    for a_mask in range(masks_count):
        for b_mask in range(masks_count):
            cs = (a_mask ^ b_mask,) if xor_mode else range(masks_count)
            for c_mask in cs:
                bits = f_bits(a_mask, b_mask, c_mask)
                v = np.zeros(dim, dtype=np.float64)
                v[2 * z + bits] = amp
                rows.append(v)
    return np.stack(rows)


def triple_ensemble_enumerated(n: int, t: int, xor_mode: bool, cap: int | None = None) -> DensityMatrix:
    """t-copy ensemble average over every triple, by full enumeration."""
    dim = 1 << ((n + 3) * t)
    _check_dim(dim, cap)
    rows = _triple_amplitude_rows(n, xor_mode)
    if t > 1:
        rows = np.stack([_kron_power(r, t) for r in rows])
    entries = rows.T @ rows / rows.shape[0]
    return DensityMatrix(entries, declared_trace=1.0)


def _kron_power(v: np.ndarray, t: int) -> np.ndarray:
    w = v
    for _ in range(t - 1):
        w = np.kron(w, v)
    return w


def _membership_moment_tables(xor_mode: bool) -> tuple[np.ndarray, ...]:
    """Joint moments of the 8 per-point occupation indicators under the two
    subset ensembles; exact dyadic values."""
    if xor_mode:
        patterns = [(ma, mb, ma ^ mb) for ma in (0, 1) for mb in (0, 1)]
    else:
        patterns = [(ma, mb, mc) for ma in (0, 1) for mb in (0, 1) for mc in (0, 1)]
    u = np.zeros((len(patterns), 8), dtype=np.float64)
    for pi, (ma, mb, mc) in enumerate(patterns):
        membership = (ma, mb, mc, 0)
        for r in range(8):
            m = membership[r >> 1]
            u[pi, r] = float(m if r & 1 else 1 - m)
    p = u.shape[0]
    m1 = u.mean(axis=0)
    m2 = np.einsum("pi,pj->ij", u, u) / p
    m3 = np.einsum("pi,pj,pk->ijk", u, u, u) / p
    m4 = np.einsum("pi,pj,pk,pl->ijkl", u, u, u, u) / p
    return m1, m2, m3, m4


def triple_ensemble_exact(n: int, t: int, xor_mode: bool, cap: int | None = None) -> DensityMatrix:
    """t-copy ensemble average by exact per-entry moment factorization.

    The expectation of a product of occupation indicators factorizes over
    distinct points, so each entry is a product of small joint moments;
    all values are dyadic rationals and exact in doubles.  Supports t <= 2.
    """
    size = 1 << n
    dim1 = 1 << (n + 3)
    dim = dim1**t
    _check_dim(dim, cap)
    m1, m2, m3, m4 = _membership_moment_tables(xor_mode)
    scale = 1.0 / float((4 * size) ** t)

    if t == 1:
        idx = np.arange(dim1)
        zs = idx >> 3
        rs = idx & 7
        outer = m1[rs][:, None] * m1[rs][None, :]
        pairwise = m2[np.ix_(rs, rs)]
        same = zs[:, None] == zs[None, :]
        return DensityMatrix(np.where(same, pairwise, outer) * scale, declared_trace=1.0)

    if t != 2:
        raise CapabilityError("moment factorization implemented for t <= 2")

    idx = np.arange(dim)
    first = idx // dim1
    second = idx % dim1
    z3, r3 = first >> 3, first & 7
    z4, r4 = second >> 3, second & 7

    entries = np.empty((dim, dim), dtype=np.float64)
    m1_r3 = m1[r3]
    m1_r4 = m1[r4]
    m2_pair34 = m2[r3, r4]
    e34 = z3 == z4
    for i in range(dim):
        z1, r1 = int(first[i]) >> 3, int(first[i]) & 7
        z2, r2 = int(second[i]) >> 3, int(second[i]) & 7
        e13 = z3 == z1
        e23 = z3 == z2
        e14 = z4 == z1
        e24 = z4 == z2
        if z1 == z2:
            row = np.select(
                [
                    e13 & e14,
                    e13 & ~e14,
                    ~e13 & e14,
                    ~e13 & ~e14 & e34,
                ],
                [
                    m4[r1, r2][r3, r4],
                    m3[r1, r2][r3] * m1_r4,
                    m3[r1, r2][r4] * m1_r3,
                    m2[r1, r2] * m2_pair34,
                ],
                default=m2[r1, r2] * m1_r3 * m1_r4,
            )
        else:
            row = np.select(
                [
                    e13 & e14,
                    e13 & e24,
                    e23 & e14,
                    e23 & e24,
                    e13,
                    e23,
                    e14,
                    e24,
                    e34,
                ],
                [
                    m3[r1][r3, r4] * m1[r2],
                    m2[r1][r3] * m2[r2][r4],
                    m2[r2][r3] * m2[r1][r4],
                    m3[r2][r3, r4] * m1[r1],
                    m2[r1][r3] * m1[r2] * m1_r4,
                    m2[r2][r3] * m1[r1] * m1_r4,
                    m2[r1][r4] * m1[r2] * m1_r3,
                    m2[r2][r4] * m1[r1] * m1_r3,
                    m1[r1] * m1[r2] * m2_pair34,
                ],
                default=m1[r1] * m1[r2] * m1_r3 * m1_r4,
            )
        entries[i] = row * scale
    return DensityMatrix(entries, declared_trace=1.0)


def triple_ensemble_sampled(
    n: int, t: int, xor_mode: bool, trials: int, rng, cap: int | None = None
) -> tuple[DensityMatrix, float]:
    """Monte Carlo ensemble average over `trials` random triples.

    Returns the average plus a crude Frobenius sampling-error bound
    sqrt(dim)/sqrt(trials); exact paths are the ones used for acceptance.
    """
    from .ensembles import sample_set_triple, triple_function

    dim = 1 << ((n + 3) * t)
    _check_dim(dim, cap)
    gen = as_generator(rng)
    acc = np.zeros((dim, dim), dtype=np.float64)
    for _ in range(trials):
        st = sample_set_triple(n, "xor" if xor_mode else "independent", gen)
        w = _kron_power(function_state(triple_function(st), cap=cap).amplitudes, t)
        acc += np.outer(w, w)
    acc /= trials
    acc = 0.5 * (acc + acc.T)
    bound = math.sqrt(dim) / math.sqrt(trials)
    return DensityMatrix(acc, declared_trace=1.0), bound


def distinct_tuple_mask(n: int, t: int) -> np.ndarray:
    """Boolean mask over t-copy basis indices whose input-register strings
    are pairwise distinct (the residual three bits per copy are ignored)."""
    dim1 = 1 << (n + 3)
    idx = np.arange(dim1**t)
    xs = []
    for j in range(t):
        digit = (idx // dim1 ** (t - 1 - j)) % dim1
        xs.append(digit >> 3)
    ok = np.ones(idx.size, dtype=bool)
    for a in range(t):
        for b in range(a + 1, t):
            ok &= xs[a] != xs[b]
    return ok


def distinct_projector_report(
    n: int,
    t: int,
    mode: str = "auto",
    trials: int = 0,
    rng=None,
    cap: int | None = None,
) -> dict:
    """Compare the two set-triple ensembles on and off the distinct subspace.

    Builds the t-copy averages (full enumeration at n <= 2, exact moment
    factorization at larger n with t <= 2, or Monte Carlo when mode is
    "sampled"), projects onto the distinct subspace, and reports the
    maximum projected entrywise deviation together with the trace-norm
    difference and its theoretical bound 4 t / 2^(n/2).
    """
    if mode == "auto":
        mode = "enumerate" if n <= 2 else "formula"
    if mode == "enumerate":
        e0 = triple_ensemble_enumerated(n, t, xor_mode=False, cap=cap)
        e1 = triple_ensemble_enumerated(n, t, xor_mode=True, cap=cap)
        sampling_error = 0.0
    elif mode == "formula":
        e0 = triple_ensemble_exact(n, t, xor_mode=False, cap=cap)
        e1 = triple_ensemble_exact(n, t, xor_mode=True, cap=cap)
        sampling_error = 0.0
    elif mode == "sampled":
        if trials < 1 or rng is None:
            raise ValueError("sampled mode needs trials >= 1 and an rng")
        e0, err0 = triple_ensemble_sampled(n, t, False, trials, rng, cap)
        e1, err1 = triple_ensemble_sampled(n, t, True, trials, rng, cap)
        sampling_error = err0 + err1
    else:
        raise ValueError(f"unknown mode {mode!r}")

    keep = distinct_tuple_mask(n, t)
    grid = np.outer(keep, keep)
    projected_dev = float(np.max(np.abs(np.where(grid, e0.entries - e1.entries, 0.0))))
    tn = trace_norm(e0.entries - e1.entries)
    return {
        "n": n,
        "t": t,
        "mode": mode,
        "dimension": int(e0.dimension),
        "max_projected_deviation": projected_dev,
        "trace_norm_difference": tn,
        "bound": 4.0 * t / math.sqrt(2.0**n),
        "sampling_error_bound": sampling_error,
    }
