import cmath
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weighted_perms.exact import (
    CycleType,
    DegenerateMeasureError,
    ExactLaw,
    block_count_law,
    block_count_moments,
    brute_force_h,
    brute_force_oracle,
    char_B,
    char_T,
    ell1_falling_factorial_moment,
    ell1_law,
    h_n,
    h_table,
    joint_cycle_count_law,
    partitions,
    total_cycles_law,
)
from weighted_perms.model import RestrictionSet, ewens, perturbed, uniform

MODELS = [uniform(), ewens(2), ewens(F(1, 3)), perturbed(1, {1: 3, 2: F(1, 2)}), perturbed(F(3, 2), {2: 0, 4: 5})]
A13 = RestrictionSet.from_allowed(3, [1, 3])


def e(s, k=1):
    return cmath.exp(1j * s * k)


def test_h_n_examples():
    assert all(h_n(uniform(), None, n) == 1 for n in range(30))
    th = F(5, 2)
    rising = F(1)
    for n in range(1, 25):
        rising *= (th + n - 1) / n
        assert h_n(ewens(th), None, n) == rising
    assert h_n(uniform(), A13) == F(1, 2)


def test_h_n_zero_is_returned_not_raised():
    A = RestrictionSet.from_allowed(5, [2])
    assert h_n(uniform(), A) == 0
    with pytest.raises(DegenerateMeasureError):
        total_cycles_law(uniform(), A)
    with pytest.raises(DegenerateMeasureError):
        brute_force_oracle(uniform(), A, "T")


def test_brute_force_examples():
    law = brute_force_oracle(uniform(), None, "T", n=3)
    assert law.as_dict() == {1: F(1, 3), 2: F(1, 2), 3: F(1, 6)}
    assert brute_force_oracle(ewens(7), None, "T", n=1).as_dict() == {1: 1}
    ct = brute_force_oracle(uniform(), A13, "cycle_type")
    assert ct.as_dict() == {(1, 1, 1): F(1, 3), (3,): F(2, 3)}
    with pytest.raises(ValueError):
        brute_force_oracle(uniform(), None, "T", n=13)


def test_partitions_and_cycle_types():
    assert [len(list(partitions(n))) for n in range(9)] == [1, 1, 2, 3, 5, 7, 11, 15, 22]
    # sum over cycle types of n!/z_lambda is n!
    for n in range(1, 9):
        assert sum(F(math.factorial(n), CycleType(p).z) for p in partitions(n)) == math.factorial(n)
    assert CycleType.from_counts({1: 2, 3: 1}).partition == (3, 1, 1)
    with pytest.raises(ValueError):
        CycleType((0, 2))


def test_char_T_examples():
    assert char_T(ewens(2), None, 0.0, n=10) == pytest.approx(1)
    for s in (0.3, -1.1, 2.5):
        want = (2 * e(s) + 3 * e(s, 2) + e(s, 3)) / 6
        assert abs(char_T(uniform(), None, s, n=3) - want) < 1e-13
        assert abs(char_T(ewens(3), None, s, n=1) - e(s)) < 1e-13


def test_char_B_examples():
    n = 6
    assert abs(char_B(ewens(2), n, [(range(1, 3), 0.0), (range(3, 7), 0.0)]) - 1) < 1e-13
    for s in (0.4, 1.9):
        assert abs(char_B(ewens(2), n, [(range(1, n + 1), s)]) - char_T(ewens(2), None, s, n=n)) < 1e-13
        want = (2 + 3 * e(s) + e(s, 3)) / 6
        assert abs(char_B(uniform(), 3, [([1], s)]) - want) < 1e-13
    with pytest.raises(ValueError, match="overlap"):
        char_B(uniform(), 5, [([1, 2], 0.1), ([2, 3], 0.2)])


def test_joint_cycle_count_examples():
    law = joint_cycle_count_law(uniform(), None, [1], n=3)
    assert law.drop_zeros().as_dict() == {(0,): F(1, 3), (1,): F(1, 2), (3,): F(1, 6)}
    m = perturbed(1, {5: 4})
    n = 5
    p = F(m.theta(n)) / (n * h_n(m, None, n))
    law = joint_cycle_count_law(m, None, [n], n=n).drop_zeros()
    assert law.as_dict() == {(1,): p, (0,): 1 - p}
    trivial = joint_cycle_count_law(ewens(2), None, [], n=6)
    assert trivial.as_dict() == {(): 1}
    with pytest.raises(ValueError):
        joint_cycle_count_law(uniform(), A13, [2])


def test_ell1_examples():
    n = 10
    assert ell1_law(uniform(), None, n).as_dict() == {k: F(1, n) for k in range(1, n + 1)}
    assert ell1_law(ewens(2), None, 1).as_dict() == {1: 1}
    law = ell1_law(uniform(), A13).drop_zeros()
    assert law.as_dict() == {1: F(1, 3), 3: F(2, 3)}


def test_ell1_falling_factorial_examples():
    assert ell1_falling_factorial_moment(ewens(2), None, 5, n=5) == 0
    for n in (1, 5, 12):
        assert ell1_falling_factorial_moment(uniform(), None, 1, n=n) == F(n - 1, 2)
    th = 2.0
    n = 2000
    val = ell1_falling_factorial_moment(ewens(2), None, 1, n=n, kind="float")
    assert val / (n / (th + 1)) == pytest.approx(1, rel=2e-3)
    with pytest.raises(ValueError):
        ell1_falling_factorial_moment(uniform(), None, 0, n=4)


restrictions = st.builds(
    lambda n, excl: RestrictionSet.from_excluded(n, {m for m in excl if m <= n}),
    st.integers(1, 8),
    st.sets(st.integers(1, 8), max_size=5),
)


@settings(max_examples=60)
@given(st.sampled_from(MODELS), restrictions)
def test_h_n_matches_brute_force(model, A):
    assert h_n(model, A) == brute_force_h(model, A)


@settings(max_examples=60)
@given(st.sampled_from(MODELS), restrictions)
def test_laws_match_brute_force_and_sum_to_one(model, A):
    if brute_force_h(model, A) == 0:
        return
    T = total_cycles_law(model, A)
    assert T.total() == 1
    assert T.drop_zeros().as_dict() == brute_force_oracle(model, A, "T").as_dict()
    L = ell1_law(model, A)
    assert L.total() == 1
    assert all(p == 0 for k, p in zip(L.support, L.probs) if k not in A)
    assert L.drop_zeros().as_dict() == brute_force_oracle(model, A, "ell1").as_dict()
    M = [m for m in (1, 2) if m in A]
    J = joint_cycle_count_law(model, A, M)
    assert J.total() == 1
    assert J.drop_zeros().as_dict() == brute_force_oracle(model, A, "C", M=M).as_dict()
    Tf = total_cycles_law(model, A, kind="float")
    assert Tf.total() == pytest.approx(1, abs=1e-12)


@settings(max_examples=40)
@given(st.sampled_from(MODELS), restrictions, st.floats(-3, 3))
def test_char_T_properties(model, A, s):
    if brute_force_h(model, A) == 0:
        return
    assert abs(char_T(model, A, 0.0) - 1) < 1e-12
    law = brute_force_oracle(model, A, "T")
    want = sum(float(p) * e(s, k) for k, p in zip(law.support, law.probs))
    got = char_T(model, A, s)
    assert abs(got) <= 1 + 1e-12
    assert abs(got - want) < 1e-12


@settings(max_examples=30)
@given(st.sampled_from(MODELS), restrictions, st.floats(-3, 3), st.integers(1, 7))
def test_char_B_partition_is_char_T(model, A, s, cut):
    if brute_force_h(model, A) == 0:
        return
    n = A.n
    cut = min(cut, n)
    blocks = [(range(1, cut + 1), s), (range(cut + 1, n + 1), s)]
    assert abs(char_B(model, n, blocks, A) - char_T(model, A, s)) < 1e-12


@pytest.mark.parametrize("model", MODELS)
def test_derivative_of_char_T_is_mean(model):
    h = 1e-5
    for n in range(1, 9):
        mean = float(brute_force_oracle(model, None, "T", n=n).expectation())
        fd = (char_T(model, None, h, n=n) - char_T(model, None, -h, n=n)) / (2 * h)
        assert abs((-1j * fd).real - mean) < 1e-6


def test_block_count_moments_match_brute_force():
    model = perturbed(1, {1: 3, 2: F(1, 2)})
    n = 8
    A = RestrictionSet.from_excluded(n, {3})
    blocks = [range(1, 3), range(3, 6), range(6, 9)]
    mean, cov = block_count_moments(model, A, blocks)
    law = brute_force_oracle(model, A, "C", M=range(1, 9))
    X = np.array([[sum(c[m - 1] for m in b) for b in blocks] for c in law.support], float)
    p = np.array([float(q) for q in law.probs])
    mu = p @ X
    assert np.allclose(mean, mu, atol=1e-12)
    assert np.allclose(cov, (X - mu).T @ ((X - mu) * p[:, None]), atol=1e-12)


def test_kinds_agree():
    model = ewens(F(7, 3))
    A = RestrictionSet.from_excluded(40, {1, 4, 9})
    exact = float(h_n(model, A))
    assert float(h_n(model, A, kind="float")) == pytest.approx(exact, rel=1e-12)
    assert float(h_n(model, A, kind="mpfloat")) == pytest.approx(exact, rel=1e-15)
    law = block_count_law(model, A, range(1, 6))
    lf = block_count_law(model, A, range(1, 6), kind="float")
    assert np.allclose([float(p) for p in law.probs], lf.probs, atol=1e-13)


def test_h_table_reuses_prefixes():
    model = ewens(3)
    long = h_table(model, None, n=30)
    short = h_table(model, None, n=10)
    assert list(short.coeffs) == list(long.coeffs[:11])


def test_exact_law_validation():
    with pytest.raises(ValueError):
        ExactLaw((1, 2), (F(1),))
    with pytest.raises(ValueError):
        ExactLaw((1,), (F(-1),))
