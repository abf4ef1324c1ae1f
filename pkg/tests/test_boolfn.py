"""Truth-table representation, Fourier analysis, predicates, and the exact
distance oracles, each cross-checked against an independent enumeration."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from qptlab import boolfn
from qptlab.boolfn import (
    BooleanFunction,
    builtin,
    evaluate,
    exact_distance_to_class,
    exact_distance_to_monotone,
    exact_distance_to_symmetric,
    fourier_monotonicity_statistic,
    from_hex,
    is_monotone,
    is_symmetric,
    is_triangle_free,
    monotone_violation_probability,
    symmetry_violation_probability,
    to_hex,
    total_influence,
    triangle_density,
    walsh_transform,
)
from qptlab.errors import ArityError, CapabilityError


def random_function(n, seed):
    gen = np.random.default_rng(seed)
    return BooleanFunction((gen.random(1 << n) < 0.5).astype(np.uint8))


def all_functions(n):
    size = 1 << n
    for code in range(1 << size):
        yield BooleanFunction([(code >> (size - 1 - i)) & 1 for i in range(size)])


# ---------------------------------------------------------------------------
# Representation and evaluation
# ---------------------------------------------------------------------------

def test_table_validation():
    with pytest.raises(ValueError):
        BooleanFunction([0, 1, 1])  # not a power of two
    with pytest.raises(ValueError):
        BooleanFunction([0, 2])
    f = BooleanFunction([0, 1, 1, 0])
    assert f.n == 2
    with pytest.raises(ValueError):
        f.table[0] = 1  # read-only


def test_evaluate_examples():
    f_and = builtin("and", 2)
    assert evaluate(f_and, "11") == 1
    assert evaluate(f_and, "01") == 0
    assert evaluate(builtin("parity", 3), "101") == 0
    assert evaluate(builtin("dictator", 3), [1, 0, 0]) == 1
    with pytest.raises(ArityError):
        evaluate(f_and, "111")


# ---------------------------------------------------------------------------
# Walsh transform
# ---------------------------------------------------------------------------

def direct_coefficient(f, mask):
    """Independent O(2^n) summation oracle for a single coefficient."""
    n = f.n
    total = 0
    for x in range(1 << n):
        total += (-1) ** (f.value(x) + bin(mask & x).count("1"))
    return Fraction(total, 1 << n)


def test_walsh_linear_functions():
    for n in (2, 3, 4):
        for a in range(1 << n):
            table = [bin(a & x).count("1") % 2 for x in range(1 << n)]
            spec = walsh_transform(BooleanFunction(table))
            expected = np.zeros(1 << n)
            expected[a] = 1.0
            np.testing.assert_array_equal(spec.coeffs, expected)


def test_walsh_and_derived_values():
    spec = walsh_transform(builtin("and", 2))
    # indices: 0 = {}, 1 = {2}, 2 = {1}, 3 = {1,2}
    assert spec.coeffs.tolist() == [0.5, 0.5, 0.5, -0.5]
    for mask in range(4):
        assert Fraction(spec.coeffs[mask]) == direct_coefficient(builtin("and", 2), mask)


def test_walsh_matches_direct_oracle_random():
    for seed in range(5):
        f = random_function(4, seed)
        spec = walsh_transform(f)
        for mask in range(16):
            assert Fraction(spec.coeffs[mask]) == direct_coefficient(f, mask)


def test_parseval_and_roundtrip():
    for seed in range(10):
        f = random_function(5, seed)
        spec = walsh_transform(f)
        assert abs(np.sum(spec.coeffs**2) - 1.0) <= 1e-10
        assert boolfn.inverse_walsh(spec) == f


def test_total_influence():
    for n in (2, 3, 5):
        assert total_influence(walsh_transform(builtin("parity", n))) == n
        assert total_influence(walsh_transform(builtin("constant0", n))) == 0
    assert total_influence(walsh_transform(builtin("and", 2))) == 1.0


# ---------------------------------------------------------------------------
# Monotonicity statistics
# ---------------------------------------------------------------------------

def violation_probability_oracle(f):
    """Plain double loop over (x, i), straight from the local condition."""
    n = f.n
    count = 0
    for x in range(1 << n):
        for i in range(1, n + 1):
            bit = 1 << (n - i)
            xi = (x >> (n - i)) & 1
            fx = f.value(x)
            fxe = f.value(x ^ bit)
            if (xi == 0 and fx == 1 and fxe == 0) or (xi == 1 and fx == 0 and fxe == 1):
                count += 1
    return Fraction(count, n * (1 << n))


def test_monotone_violation_probability_examples():
    assert monotone_violation_probability(builtin("dictator", 4)) == 0.0
    for n in (1, 2, 3, 4, 5):
        f = builtin("antidictator", n)
        assert Fraction(monotone_violation_probability(f)) == Fraction(1, n)
        assert violation_probability_oracle(f) == Fraction(1, n)
    for n in (2, 3, 4):
        f = builtin("parity", n)
        assert monotone_violation_probability(f) == 0.5
        assert violation_probability_oracle(f) == Fraction(1, 2)


def test_violation_probability_matches_oracle_random():
    for seed in range(8):
        f = random_function(4, seed)
        assert Fraction(monotone_violation_probability(f)) == violation_probability_oracle(f)


def test_fourier_statistic_examples():
    assert fourier_monotonicity_statistic(builtin("dictator", 3)) == 0.0
    for n in (2, 3, 6):
        assert abs(fourier_monotonicity_statistic(builtin("antidictator", n)) - 1 / n) < 1e-12
        assert abs(fourier_monotonicity_statistic(builtin("parity", n)) - 0.5) < 1e-12


def test_fourier_statistic_equals_violation_probability_n2():
    for f in all_functions(2):
        a = fourier_monotonicity_statistic(f)
        b = monotone_violation_probability(f)
        assert abs(a - b) <= 1e-12


# ---------------------------------------------------------------------------
# Symmetry statistics
# ---------------------------------------------------------------------------

def symmetry_violation_oracle(f):
    """Full enumeration over S_n x {0,1}^n."""
    n = f.n
    disagreements = 0
    total = 0
    for perm in itertools.permutations(range(1, n + 1)):
        for x in range(1 << n):
            bits = [(x >> (n - i)) & 1 for i in range(1, n + 1)]
            # coordinate i of the image takes the value of coordinate perm^-1(i)
            image = 0
            for i in range(1, n + 1):
                image = (image << 1) | bits[perm[i - 1] - 1]
            disagreements += f.value(x) != f.value(image)
            total += 1
    return Fraction(disagreements, total)


def test_symmetry_violation_examples():
    assert symmetry_violation_probability(builtin("parity", 5)) == 0.0
    assert symmetry_violation_probability(builtin("majority", 5)) == 0.0
    f = builtin("dictator", 2)
    assert Fraction(symmetry_violation_probability(f)) == Fraction(1, 4)
    assert symmetry_violation_oracle(f) == Fraction(1, 4)


def test_symmetry_violation_matches_full_enumeration():
    for n in (2, 3, 4, 5):
        f = builtin("dictator", n)
        assert boolfn.symmetry_violation_fraction(f) == symmetry_violation_oracle(f)
    for seed in range(4):
        f = random_function(4, seed + 50)
        assert boolfn.symmetry_violation_fraction(f) == symmetry_violation_oracle(f)


# ---------------------------------------------------------------------------
# Triangle statistics
# ---------------------------------------------------------------------------

def triangle_density_oracle(f):
    n = f.n
    count = 0
    for x in range(1 << n):
        for y in range(1 << n):
            count += f.value(x) & f.value(y) & f.value(x ^ y)
    return Fraction(count, 4**n)


def test_triangle_density_examples():
    assert triangle_density(builtin("constant1", 3)) == 1.0
    assert triangle_density(builtin("constant0", 3)) == 0.0
    halfspace = builtin("dictator", 4)
    assert triangle_density(halfspace) == 0.0
    assert triangle_density_oracle(halfspace) == 0
    for seed in range(5):
        f = random_function(4, seed + 9)
        assert Fraction(triangle_density(f)) == triangle_density_oracle(f)


def test_predicates():
    maj = builtin("majority", 3)
    assert is_monotone(maj) and is_symmetric(maj)
    assert not is_monotone(builtin("antidictator", 3))
    for n in (1, 2, 4):
        assert not is_triangle_free(builtin("constant1", n))
    assert is_triangle_free(builtin("dictator", 5))
    assert is_symmetric(builtin("parity", 6))
    assert not is_symmetric(builtin("dictator", 3))


# ---------------------------------------------------------------------------
# Exact distance oracles
# ---------------------------------------------------------------------------

def test_dedekind_counts():
    assert [boolfn.monotone_tables(n).shape[0] for n in (1, 2, 3, 4, 5)] == [
        3, 6, 20, 168, 7581,
    ]


def test_distance_to_monotone_examples():
    maj = builtin("majority", 3)
    report = exact_distance_to_monotone(maj)
    assert report.epsilon == 0.0 and report.witness == maj
    # frozen values produced by this enumeration oracle
    assert exact_distance_to_monotone(builtin("antidictator", 3)).epsilon == 4 / 8
    assert exact_distance_to_monotone(builtin("parity", 4)).epsilon == 5 / 16
    with pytest.raises(CapabilityError):
        exact_distance_to_monotone(builtin("parity", 6))


def test_distance_to_monotone_witness_properties():
    for seed in range(6):
        f = random_function(4, seed + 100)
        report = exact_distance_to_monotone(f)
        assert is_monotone(report.witness)
        dist = int(np.sum(report.witness.table != f.table))
        assert dist == round(report.epsilon * 16)


def test_distance_to_monotone_against_generic_enumeration():
    # dual route at n = 2: recursive-extension oracle vs filtering all tables
    for f in all_functions(2):
        fast = exact_distance_to_monotone(f).epsilon
        slow = exact_distance_to_class(f, is_monotone).epsilon
        assert fast == slow


def symmetric_functions(n):
    for assignment in itertools.product((0, 1), repeat=n + 1):
        w = boolfn.weights(n)
        yield BooleanFunction(np.array(assignment, dtype=np.uint8)[w])


def test_distance_to_symmetric_examples():
    assert exact_distance_to_symmetric(builtin("parity", 4)).epsilon == 0.0
    f = builtin("dictator", 2)
    report = exact_distance_to_symmetric(f)
    assert report.epsilon == 1 / 4
    # cross-check by enumerating every symmetric function on 2 bits
    best = min(int(np.sum(g.table != f.table)) for g in symmetric_functions(2))
    assert best == 1
    assert exact_distance_to_symmetric(builtin("dictator", 8)).epsilon == 93 / 256


def test_distance_to_symmetric_witness():
    for seed in range(6):
        f = random_function(5, seed + 30)
        report = exact_distance_to_symmetric(f)
        assert is_symmetric(report.witness)
        dist = int(np.sum(report.witness.table != f.table))
        assert dist == round(report.epsilon * 32)
    # tie goes to 0: single weight-1 point set on 2 bits ties its class
    f = BooleanFunction([0, 1, 0, 0])
    witness = exact_distance_to_symmetric(f).witness
    assert witness.value(0b01) == 0 and witness.value(0b10) == 0


def test_distance_to_class_examples():
    f = builtin("dictator", 3)
    assert exact_distance_to_class(f, is_triangle_free).epsilon == 0.0
    assert exact_distance_to_class(builtin("constant1", 3), is_triangle_free).epsilon == 4 / 8
    with pytest.raises(CapabilityError):
        exact_distance_to_class(builtin("constant1", 5), is_triangle_free)


# ---------------------------------------------------------------------------
# Named constructions
# ---------------------------------------------------------------------------

def test_builtin_examples():
    h0 = builtin("constant0", 2)
    assert builtin("mm", h=h0) == builtin("inner_product", 4)
    empty = np.zeros(4, dtype=bool)
    t = builtin("triple", 2, a=empty, b=empty, c=empty)
    assert t == builtin("constant0", 4)
    assert "".join(map(str, builtin("majority", 3).table)) == "00010111"
    with pytest.raises(ValueError):
        builtin("no_such_function", 3)
    with pytest.raises(ValueError):
        builtin("dictator", 3, i=4)


def test_triple_and_pair_slices():
    gen = np.random.default_rng(0)
    n = 3
    a = gen.random(8) < 0.5
    b = gen.random(8) < 0.5
    c = gen.random(8) < 0.5
    f = builtin("triple", n, a=a, b=b, c=c)
    assert f.n == n + 2
    for x in range(8):
        assert f.value(x * 4 + 0) == int(a[x])
        assert f.value(x * 4 + 1) == int(b[x])
        assert f.value(x * 4 + 2) == int(c[x])
        assert f.value(x * 4 + 3) == 0
    g = builtin("pair", n, a=a, b=b)
    assert g.n == n + 1
    for x in range(8):
        assert g.value(2 * x) == int(a[x])
        assert g.value(2 * x + 1) == int(b[x])


def test_mm_dual_blocks():
    h = random_function(3, 77)
    f = builtin("mm", h=h)
    g = builtin("mm_dual", h=h)
    for x in range(8):
        for y in range(8):
            ip = bin(x & y).count("1") % 2
            assert f.value(x * 8 + y) == ip ^ h.value(x)
            assert g.value(x * 8 + y) == ip ^ h.value(y)


# ---------------------------------------------------------------------------
# Hex truth-table format
# ---------------------------------------------------------------------------

def test_hex_round_trip():
    for n in (2, 3, 5, 8):
        for seed in range(3):
            f = random_function(n, seed + n)
            assert from_hex(to_hex(f)) == f


def test_hex_conventions():
    assert to_hex(builtin("dictator", 4)) == "00ff"
    assert from_hex("00ff") == builtin("dictator", 4)
    assert from_hex("8") == BooleanFunction([1, 0, 0, 0])
    with pytest.raises(ValueError):
        from_hex("abc")  # 12 bits is not a power-of-two table
    with pytest.raises(CapabilityError):
        to_hex(BooleanFunction([0, 1]))


def test_table_file_round_trip(tmp_path):
    f = random_function(6, 5)
    path = tmp_path / "f.hex"
    boolfn.save_table(path, f)
    assert boolfn.load_table(path) == f
