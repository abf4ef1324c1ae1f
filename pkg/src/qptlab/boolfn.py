"""Boolean functions as explicit truth tables, with Fourier analysis,
property predicates, and exact distance oracles.

Index convention, shared by every module: an input x = x1...xn is stored at
table index int(x) = sum_i x_i * 2^(n-i), i.e. x1 is the most significant
bit.  Subsets S of [n] use the same encoding (coordinate i maps to bit
2^(n-i) of the mask).  Fourier coefficients are stored for g = (-1)^f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ArityError, CapabilityError

MAX_ARITY = 20

PARSEVAL_TOL = 1e-10

# Enumeration caps for the exact distance oracles.
MONOTONE_ENUM_MAX_ARITY = 5
CLASS_ENUM_MAX_ARITY = 4


class BooleanFunction:
    """Immutable truth table of an n-bit Boolean function."""

    __slots__ = ("n", "table", "_spectrum")

    def __init__(self, table: Sequence[int] | np.ndarray):
        arr = np.asarray(table, dtype=np.uint8)
        if arr.ndim != 1 or arr.size < 2 or arr.size & (arr.size - 1):
            raise ValueError(f"table length must be a power of two >= 2, got {arr.size}")
        n = arr.size.bit_length() - 1
        if n > MAX_ARITY:
            raise CapabilityError(f"arity {n} exceeds the supported maximum {MAX_ARITY}")
        if arr.max(initial=0) > 1:
            raise ValueError("table entries must be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "table", arr)
        object.__setattr__(self, "_spectrum", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("BooleanFunction is immutable")

    @classmethod
    def from_callable(cls, fn: Callable[[int], int], n: int) -> "BooleanFunction":
        """Build from a predicate on table indices (most-significant-bit order)."""
        return cls([fn(ix) & 1 for ix in range(1 << n)])

    def value(self, ix: int) -> int:
        """f at the table index ix."""
        return int(self.table[ix])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BooleanFunction)
            and self.n == other.n
            and bool(np.array_equal(self.table, other.table))
        )

    def __hash__(self) -> int:
        return hash((self.n, self.table.tobytes()))

    def __repr__(self) -> str:
        if self.n <= 4:
            bits = "".join(str(b) for b in self.table)
            return f"BooleanFunction(n={self.n}, table={bits})"
        return f"BooleanFunction(n={self.n}, hex={to_hex(self)})"

    def __reduce__(self):
        return (BooleanFunction, (self.table.tolist(),))


def index_of(x: str | Sequence[int], n: int) -> int:
    """Table index of the input bit string x (x1 most significant)."""
    if isinstance(x, str):
        if len(x) != n:
            raise ArityError(f"input has length {len(x)}, expected {n}")
        if any(c not in "01" for c in x):
            raise ValueError(f"input must be a bit string, got {x!r}")
        return int(x, 2)
    bits = list(x)
    if len(bits) != n:
        raise ArityError(f"input has length {len(bits)}, expected {n}")
    ix = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError("input entries must be 0 or 1")
        ix = (ix << 1) | b
    return ix


def bit_string(ix: int, n: int) -> str:
    """Inverse of index_of."""
    return format(ix, f"0{n}b")


def evaluate(f: BooleanFunction, x: str | Sequence[int]) -> int:
    """Evaluate f on the bit string x."""
    return f.value(index_of(x, f.n))


def weights(n: int) -> np.ndarray:
    """Hamming weight of every table index 0..2^n-1."""
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.int64)


# ---------------------------------------------------------------------------
# Fourier analysis
# ---------------------------------------------------------------------------

class FourierSpectrum:
    """Walsh coefficients of g = (-1)^f, indexed by subset masks.

    coeffs[int(S)] = 2^-n * sum_x (-1)^(f(x) + <S,x>).  Parseval is checked
    on construction.
    """

    __slots__ = ("n", "coeffs", "_alias")

    def __init__(self, n: int, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.size != 1 << n:
            raise ValueError("coefficient vector has wrong length")
        mass = float(np.sum(coeffs * coeffs))
        if abs(mass - 1.0) > PARSEVAL_TOL:
            raise ValueError(f"Parseval violated: total squared mass {mass}")
        if float(np.max(np.abs(coeffs))) > 1.0 + PARSEVAL_TOL:
            raise ValueError("coefficient exceeds 1 in magnitude")
        coeffs = coeffs.copy()
        coeffs.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "_alias", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("FourierSpectrum is immutable")

    def probabilities(self) -> np.ndarray:
        """The sampling distribution over subset masks: coeffs squared."""
        return self.coeffs * self.coeffs

    def sample_masks(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw subset masks i.i.d. with probability coeffs[S]^2 (alias method)."""
        if self._alias is None:
            object.__setattr__(self, "_alias", _build_alias_table(self.probabilities()))
        accept, alias = self._alias
        k = accept.size
        idx = rng.integers(0, k, size=size)
        pick = rng.random(size) < accept[idx]
        return np.where(pick, idx, alias[idx])


def _build_alias_table(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Walker alias table: O(K) setup, O(1) per draw."""
    k = probs.size
    accept = np.zeros(k, dtype=np.float64)
    alias = np.zeros(k, dtype=np.int64)
    scaled = probs * k
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    scaled = scaled.copy()
    while small and large:
        s = small.pop()
        l = large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] + scaled[s] - 1.0
        (small if scaled[l] < 1.0 else large).append(l)
    for i in large + small:
        accept[i] = 1.0
        alias[i] = i
    return accept, alias


def _walsh_ints(f: BooleanFunction) -> np.ndarray:
    """Unnormalized transform sum_x (-1)^(f(x)+<S,x>) as exact int64."""
    a = (1 - 2 * f.table.astype(np.int64)).copy()
    h = 1
    size = a.size
    while h < size:
        a = a.reshape(-1, 2 * h)
        left = a[:, :h].copy()
        right = a[:, h:].copy()
        a[:, :h] = left + right
        a[:, h:] = left - right
        a = a.reshape(size)
        h *= 2
    return a


def walsh_transform(f: BooleanFunction) -> FourierSpectrum:
    """Fast transform of g = (-1)^f; result cached on the function."""
    if f._spectrum is None:
        coeffs = _walsh_ints(f).astype(np.float64) / (1 << f.n)
        object.__setattr__(f, "_spectrum", FourierSpectrum(f.n, coeffs))
    return f._spectrum


def inverse_walsh(spec: FourierSpectrum) -> BooleanFunction:
    """Reconstruct f from its spectrum (exact for genuine Boolean spectra)."""
    signs = _float_walsh(spec.coeffs)
    table = np.where(signs < 0, 1, 0).astype(np.uint8)
    rebuilt = BooleanFunction(table)
    if not np.allclose(signs, 1 - 2 * table.astype(np.float64), atol=1e-6):
        raise ValueError("spectrum does not correspond to a Boolean function")
    return rebuilt


def _float_walsh(values: np.ndarray) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64).copy()
    h = 1
    size = a.size
    while h < size:
        a = a.reshape(-1, 2 * h)
        left = a[:, :h].copy()
        right = a[:, h:].copy()
        a[:, :h] = left + right
        a[:, h:] = left - right
        a = a.reshape(size)
        h *= 2
    return a


def total_influence(spec: FourierSpectrum) -> float:
    """Expected subset size under the squared-coefficient distribution."""
    return float(np.sum(weights(spec.n) * spec.probabilities()))


def single_coordinate_coefficients(spec: FourierSpectrum) -> np.ndarray:
    """Coefficients of the n singleton subsets, ordered by coordinate 1..n."""
    n = spec.n
    masks = [1 << (n - i) for i in range(1, n + 1)]
    return spec.coeffs[masks]


def fourier_monotonicity_statistic(f: BooleanFunction) -> float:
    """(total influence - sum of singleton coefficients) / (2n), exact spectra."""
    spec = walsh_transform(f)
    n = f.n
    return (total_influence(spec) - float(np.sum(single_coordinate_coefficients(spec)))) / (2 * n)


# ---------------------------------------------------------------------------
# Property predicates and exact violation probabilities
# ---------------------------------------------------------------------------

def _monotone_violation_count(f: BooleanFunction) -> int:
    """Number of (x, i) pairs witnessing a local monotonicity violation.

    A violating edge (x, x+e_i) with f decreasing upward is counted from
    both endpoints, matching the two clauses of the local characterization.
    """
    n = f.n
    table = f.table.astype(np.int64)
    idx = np.arange(1 << n)
    count = 0
    for i in range(1, n + 1):
        bit = 1 << (n - i)
        low = idx[(idx & bit) == 0]
        # decreasing edge: f(low)=1, f(low+e_i)=0; seen from both ends
        count += 2 * int(np.sum((table[low] == 1) & (table[low | bit] == 0)))
    return count


def monotone_violation_probability(f: BooleanFunction) -> float:
    """Exact Pr over uniform x and uniform i in [n] of a local violation."""
    return _monotone_violation_count(f) / (f.n * (1 << f.n))


def is_monotone(f: BooleanFunction) -> bool:
    return _monotone_violation_count(f) == 0


def weight_class_counts(f: BooleanFunction) -> np.ndarray:
    """counts[w, b] = #{x : |x| = w, f(x) = b}, shape (n+1, 2)."""
    n = f.n
    w = weights(n)
    counts = np.zeros((n + 1, 2), dtype=np.int64)
    np.add.at(counts, (w, f.table.astype(np.int64)), 1)
    return counts


def symmetry_violation_fraction(f: BooleanFunction) -> Fraction:
    """Exact Pr over uniform x and uniform permutation pi that f(x) != f(pi(x)).

    Closed form from weight classes: the image pi(x) is uniform on the weight
    class of x, so the agreement probability is
    2^-n * sum_w (c_{w,0}^2 + c_{w,1}^2) / C(n, w).
    """
    n = f.n
    counts = weight_class_counts(f)
    agree = Fraction(0)
    for w in range(n + 1):
        c0, c1 = int(counts[w, 0]), int(counts[w, 1])
        agree += Fraction(c0 * c0 + c1 * c1, math.comb(n, w))
    return 1 - agree / (1 << n)


def symmetry_violation_probability(f: BooleanFunction) -> float:
    return float(symmetry_violation_fraction(f))


def is_symmetric(f: BooleanFunction) -> bool:
    counts = weight_class_counts(f)
    return bool(np.all((counts[:, 0] == 0) | (counts[:, 1] == 0)))


def _triangle_count(f: BooleanFunction) -> int:
    """#{(x, y) : f(x) = f(y) = f(x xor y) = 1}, ordered pairs."""
    table = f.table.astype(np.int64)
    ones = np.flatnonzero(table)
    if ones.size == 0:
        return 0
    xor = ones[:, None] ^ ones[None, :]
    return int(np.sum(table[xor]))


def triangle_density(f: BooleanFunction) -> float:
    """Exact Pr over uniform independent x, y of a triangle, O(4^n)."""
    return _triangle_count(f) / float(4 ** f.n)


def is_triangle_free(f: BooleanFunction) -> bool:
    return _triangle_count(f) == 0


# ---------------------------------------------------------------------------
# Exact distance oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceReport:
    """Minimum normalized Hamming distance to a property class."""

    epsilon: float
    witness: BooleanFunction | None = None


@lru_cache(maxsize=None)
def monotone_tables(n: int) -> np.ndarray:
    """All monotone truth tables on n bits, one per row.

    Generated by assigning values in increasing weight order, forcing 1
    whenever some immediate predecessor is already 1.  Row counts follow
    the Dedekind numbers (168 at n=4, 7581 at n=5).
    """
    if n > MONOTONE_ENUM_MAX_ARITY:
        raise CapabilityError(
            f"monotone enumeration supports n <= {MONOTONE_ENUM_MAX_ARITY}, got {n}"
        )
    size = 1 << n
    order = sorted(range(size), key=lambda ix: (int(weights(n)[ix]), ix))
    covers = [[ix & ~(1 << b) for b in range(n) if ix & (1 << b)] for ix in range(size)]
    out: list[np.ndarray] = []
    table = np.zeros(size, dtype=np.uint8)

    def assign(pos: int) -> None:
        if pos == size:
            out.append(table.copy())
            return
        ix = order[pos]
        forced = any(table[c] for c in covers[ix])
        if forced:
            table[ix] = 1
            assign(pos + 1)
            table[ix] = 0
        else:
            table[ix] = 0
            assign(pos + 1)
            table[ix] = 1
            assign(pos + 1)
            table[ix] = 0

    assign(0)
    return np.array(out, dtype=np.uint8)


def exact_distance_to_monotone(f: BooleanFunction) -> DistanceReport:
    """Minimum normalized Hamming distance to any monotone function, n <= 5."""
    if f.n > MONOTONE_ENUM_MAX_ARITY:
        raise CapabilityError(
            f"exact monotone distance supports n <= {MONOTONE_ENUM_MAX_ARITY}, got {f.n}"
        )
    tables = monotone_tables(f.n)
    dists = np.sum(tables != f.table[None, :], axis=1)
    best = int(np.argmin(dists))
    return DistanceReport(
        epsilon=float(dists[best]) / (1 << f.n),
        witness=BooleanFunction(tables[best]),
    )


def exact_distance_to_symmetric(f: BooleanFunction) -> DistanceReport:
    """Distance realized by per-weight-class majority vote (ties go to 0)."""
    n = f.n
    counts = weight_class_counts(f)
    flips = int(np.sum(np.minimum(counts[:, 0], counts[:, 1])))
    class_value = (counts[:, 1] > counts[:, 0]).astype(np.uint8)
    witness = BooleanFunction(class_value[weights(n)])
    return DistanceReport(epsilon=flips / (1 << n), witness=witness)


def exact_distance_to_class(
    f: BooleanFunction, predicate: Callable[[BooleanFunction], bool]
) -> DistanceReport:
    """Minimum distance to any function satisfying the predicate, n <= 4.

    Enumerates all 2^(2^n) truth tables; generic oracle for classes without
    a bespoke enumeration.
    """
    n = f.n
    if n > CLASS_ENUM_MAX_ARITY:
        raise CapabilityError(
            f"class enumeration supports n <= {CLASS_ENUM_MAX_ARITY}, got {n}"
        )
    size = 1 << n
    best_d = size + 1
    best: BooleanFunction | None = None
    shifts = np.arange(size - 1, -1, -1, dtype=np.uint32)
    for code in range(1 << size):
        table = (code >> shifts) & 1
        g = BooleanFunction(table.astype(np.uint8))
        if not predicate(g):
            continue
        d = int(np.sum(g.table != f.table))
        if d < best_d:
            best_d = d
            best = g
            if d == 0:
                break
    if best is None:
        raise ValueError("no function in the class")
    return DistanceReport(epsilon=best_d / size, witness=best)


# ---------------------------------------------------------------------------
# Named constructions
# ---------------------------------------------------------------------------

def _as_member_array(s, n: int) -> np.ndarray:
    """Normalize a subset of {0,1}^n to a boolean membership array."""
    size = 1 << n
    if isinstance(s, np.ndarray) and s.dtype == bool:
        if s.size != size:
            raise ArityError(f"membership array has length {s.size}, expected {size}")
        return s
    arr = np.zeros(size, dtype=bool)
    for x in s:
        ix = index_of(x, n) if isinstance(x, str) else int(x)
        if not 0 <= ix < size:
            raise ValueError(f"member {x} out of range for n={n}")
        arr[ix] = True
    return arr


def inner_product_table(n: int) -> np.ndarray:
    """<x,y> mod 2 for the 2n-bit input (x, y), as a uint8 table."""
    if n % 2:
        raise ArityError(f"inner product needs even arity, got {n}")
    half = n // 2
    idx = np.arange(1 << n, dtype=np.uint32)
    hi = idx >> half
    lo = idx & ((1 << half) - 1)
    return (np.bitwise_count(hi & lo) & 1).astype(np.uint8)


BUILTIN_NAMES = (
    "constant0",
    "constant1",
    "dictator",
    "antidictator",
    "majority",
    "parity",
    "and",
    "or",
    "inner_product",
    "mm",
    "mm_dual",
    "triple",
    "pair",
)


def builtin(name: str, n: int | None = None, **params) -> BooleanFunction:
    """Construct a named function.

    Plain families take the arity n: constant0, constant1, dictator[:i],
    antidictator[:i], majority (1 iff |x| > n/2), parity, and, or,
    inner_product (n even, blocks of n/2).  mm/mm_dual take h (a
    BooleanFunction on k bits) and yield <x,y> + h(x) resp. <x,y> + h(y)
    on 2k bits.  triple takes subsets A, B, C of {0,1}^n and yields the
    (n+2)-bit selector (slice a=11 is constant 0); pair takes A, B and
    yields the (n+1)-bit selector.
    """
    if name in ("mm", "mm_dual"):
        h = params.get("h")
        if not isinstance(h, BooleanFunction):
            raise ValueError(f"{name} requires h=BooleanFunction")
        k = h.n
        ip = inner_product_table(2 * k)
        idx = np.arange(1 << (2 * k), dtype=np.uint32)
        block = idx >> k if name == "mm" else idx & ((1 << k) - 1)
        return BooleanFunction(ip ^ h.table[block])

    if name == "triple":
        if n is None:
            raise ValueError("triple requires n")
        a = _as_member_array(params["a"], n)
        b = _as_member_array(params["b"], n)
        c = _as_member_array(params["c"], n)
        idx = np.arange(1 << (n + 2), dtype=np.uint32)
        x = idx >> 2
        sel = idx & 3
        table = np.zeros(idx.size, dtype=np.uint8)
        table[sel == 0] = a[x[sel == 0]]
        table[sel == 1] = b[x[sel == 1]]
        table[sel == 2] = c[x[sel == 2]]
        return BooleanFunction(table)

    if name == "pair":
        if n is None:
            raise ValueError("pair requires n")
        a = _as_member_array(params["a"], n)
        b = _as_member_array(params["b"], n)
        idx = np.arange(1 << (n + 1), dtype=np.uint32)
        x = idx >> 1
        table = np.where(idx & 1, b[x], a[x]).astype(np.uint8)
        return BooleanFunction(table)

    if n is None:
        raise ValueError(f"{name} requires n")
    size = 1 << n
    w = weights(n)
    if name == "constant0":
        return BooleanFunction(np.zeros(size, dtype=np.uint8))
    if name == "constant1":
        return BooleanFunction(np.ones(size, dtype=np.uint8))
    if name in ("dictator", "antidictator"):
        i = int(params.get("i", 1))
        if not 1 <= i <= n:
            raise ValueError(f"coordinate {i} out of range for n={n}")
        bit = ((np.arange(size) >> (n - i)) & 1).astype(np.uint8)
        return BooleanFunction(bit if name == "dictator" else 1 - bit)
    if name == "majority":
        return BooleanFunction((2 * w > n).astype(np.uint8))
    if name == "parity":
        return BooleanFunction((w & 1).astype(np.uint8))
    if name == "and":
        return BooleanFunction((w == n).astype(np.uint8))
    if name == "or":
        return BooleanFunction((w > 0).astype(np.uint8))
    if name == "inner_product":
        return BooleanFunction(inner_product_table(n))
    raise ValueError(f"unknown builtin {name!r}; known: {', '.join(BUILTIN_NAMES)}")


# ---------------------------------------------------------------------------
# Truth-table file format
# ---------------------------------------------------------------------------

def to_hex(f: BooleanFunction) -> str:
    """Lowercase hex, 2^n table bits packed most-significant-bit-first.

    Arity is inferred from the digit count on load, so the format covers
    n >= 2 (a 2-bit table does not fill a hex digit).
    """
    if f.n < 2:
        raise CapabilityError("hex format requires n >= 2")
    bits = np.packbits(f.table)
    digits = (1 << f.n) // 4
    return bits.tobytes().hex()[:digits]


def from_hex(text: str) -> BooleanFunction:
    text = text.strip().lower()
    nbits = 4 * len(text)
    if nbits < 4 or nbits & (nbits - 1):
        raise ValueError(f"hex length {len(text)} does not encode a power-of-two table")
    n = nbits.bit_length() - 1
    padded = text if len(text) % 2 == 0 else text + "0"
    raw = np.frombuffer(bytes.fromhex(padded), dtype=np.uint8)
    table = np.unpackbits(raw)[:nbits]
    return BooleanFunction(table)


def save_table(path, f: BooleanFunction) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_hex(f) + "\n")


def load_table(path) -> BooleanFunction:
    with open(path, "r", encoding="ascii") as fh:
        return from_hex(fh.readline())
