from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weighted_perms.exact import DegenerateMeasureError, brute_force_oracle
from weighted_perms.harness import chi2_against
from weighted_perms.model import RestrictionSet, ewens, parse_restriction, perturbed, uniform
from weighted_perms.sampler import (
    AcceptanceCollapseError,
    ConditionedPoissonSampler,
    CycleCountVector,
    RngStream,
    SequentialSampler,
    choose_tilt,
    conditioned_poisson_counts,
    run_chunks,
    sample_conditioned_poisson,
    sample_gem,
    sample_sequential,
    sequential_lengths,
)

MODELS = [uniform(), ewens(2), perturbed(1, {1: 3, 2: F(1, 2)})]
A13 = RestrictionSet.from_allowed(3, [1, 3])


def rng(seed=1, stream=0):
    return RngStream(seed, stream).generator()


def types_from_lengths(draws):
    return Counter(tuple(sorted(d, reverse=True)) for d in draws)


def test_n_equals_one():
    g = rng()
    for _ in range(20):
        assert sample_sequential(ewens(3), None, 1, g).counts == ((1, 1),)
        assert sample_conditioned_poisson(ewens(3), None, 1, g).counts == ((1, 1),)


def test_uniform_n3_frequencies():
    draws = sequential_lengths(uniform(), RestrictionSet(3), 100_000, seed=3)
    T = Counter(len(d) for d in draws)
    law = brute_force_oracle(uniform(), None, "T", n=3).as_dict()
    assert law == {1: F(1, 3), 2: F(1, 2), 3: F(1, 6)}
    _, p, _ = chi2_against(T, law, len(draws))
    assert p > 1e-3


def test_restricted_n3_types():
    draws = sequential_lengths(uniform(), A13, 100_000, seed=4)
    ct = types_from_lengths(draws)
    assert set(ct) == {(3,), (1, 1, 1)}
    assert ct[(3,)] / len(draws) == pytest.approx(2 / 3, abs=0.005)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.spec)
@pytest.mark.parametrize("spec", ["full", "odd", "exclude:2", "prefix:b=2"])
def test_sequential_chi2_small_n(model, spec):
    n = 8
    A = parse_restriction(spec).at(n)
    law = brute_force_oracle(model, A, "cycle_type").as_dict()
    draws = sequential_lengths(model, A, 100_000, seed=21)
    _, p, _ = chi2_against(types_from_lengths(draws), law, len(draws))
    assert p > 1e-3


def test_conditioned_poisson_chi2_uniform_n8():
    n = 8
    A = RestrictionSet(n)
    ms, rows = conditioned_poisson_counts(uniform(), A, 100_000, seed=5)
    T = Counter(int(t) for t in rows.sum(axis=1))
    law = brute_force_oracle(uniform(), A, "T").as_dict()
    _, p, _ = chi2_against(T, law, len(rows))
    assert p > 1e-3
    assert np.all(rows @ ms == n)


def test_choose_tilt_examples():
    t = choose_tilt(ewens(2), None, 100)
    assert 0.97 < t < 1
    for n in (10, 100, 1000):
        t = choose_tilt(uniform(), None, n)
        assert t <= 1 - 1 / (2 * n)
    assert choose_tilt(uniform(), None, 1000) > choose_tilt(uniform(), None, 100)
    t1 = choose_tilt(ewens(2), None, 1)
    assert 0 < t1 < 1
    s = ConditionedPoissonSampler(ewens(2), None, 1, t=t1)
    s.sample_counts(10, rng())
    assert s.acceptance_rate > 0
    # mean of v at the tilt is n when the root lies below the cap
    n = 50
    t = choose_tilt(ewens(2), None, n)
    assert sum(2 * t**m for m in range(1, n + 1)) == pytest.approx(n, rel=1e-9)


def test_tilt_validation_and_collapse():
    with pytest.raises(ValueError):
        ConditionedPoissonSampler(uniform(), None, 10, t=1.5)
    s = ConditionedPoissonSampler(uniform(), None, 60, t=0.01, max_attempts=3)
    with pytest.raises(AcceptanceCollapseError):
        s.sample_counts(5, rng())


def test_degenerate_measure():
    with pytest.raises(DegenerateMeasureError):
        SequentialSampler(uniform(), RestrictionSet.from_allowed(5, [2]))


def test_gem():
    gem, pd = sample_gem(1, 5, rng(), count=200_000)
    assert gem[:, 0].mean() == pytest.approx(0.5, abs=0.005)
    assert np.all(np.diff(pd, axis=1) <= 0)
    assert np.all(gem.sum(axis=1) < 1)
    big, _ = sample_gem(1e6, 3, rng(), count=1000)
    assert big.max() < 1e-4
    single, _ = sample_gem(2, 4, rng())
    assert single.shape == (4,)
    with pytest.raises(ValueError):
        sample_gem(1, 0, rng())


def test_determinism_and_thread_independence():
    a = sequential_lengths(ewens(2), RestrictionSet(40), 3500, seed=9, threads=1)
    b = sequential_lengths(ewens(2), RestrictionSet(40), 3500, seed=9, threads=4)
    c = sequential_lengths(ewens(2), RestrictionSet(40), 3500, seed=10, threads=1)
    assert a == b
    assert a != c
    x = RngStream(5, 2).generator().random(10)
    assert np.array_equal(x, RngStream(5, 2).generator().random(10))
    assert not np.array_equal(x, RngStream(5, 3).generator().random(10))
    with pytest.raises(ValueError):
        RngStream(-1)


def test_run_chunks_sizes():
    out = run_chunks(lambda size, g: [size] * size, 2500, seed=1, threads=3)
    assert len(out) == 2500
    assert out[:1000] == [1000] * 1000 and out[-500:] == [500] * 500


def test_large_n_float_table():
    n = 3000
    s = SequentialSampler(ewens(2), parse_restriction("tail:a=0.3").at(n))
    v = s.sample(rng())
    assert sum(m * c for m, c in v.counts) == n
    assert v.respects(s.A)


@settings(max_examples=30)
@given(st.sampled_from(MODELS), st.integers(1, 40), st.sets(st.integers(2, 40), max_size=6), st.integers(0, 2**32))
def test_draws_respect_size_and_restriction(model, n, excl, seed):
    A = RestrictionSet.from_excluded(n, {m for m in excl if m <= n})
    g = rng(seed)
    for sampler in (SequentialSampler(model, A), ConditionedPoissonSampler(model, A)):
        for _ in range(3):
            v = sampler.sample(g)
            assert sum(m * c for m, c in v.counts) == n
            assert v.respects(A)


def test_cycle_count_vector():
    v = CycleCountVector.from_lengths(6, [3, 1, 2], keep_order=True)
    assert v.count(1) == 1 and v.count(4) == 0
    assert v.T == 3
    assert v.cycle_type() == (3, 2, 1)
    assert v.order == (3, 1, 2)
    assert list(v.dense()) == [0, 1, 1, 1, 0, 0, 0]
    assert v.sparse() == "1:1 2:1 3:1"
    with pytest.raises(ValueError):
        CycleCountVector(5, ((1, 2),))
    with pytest.raises(ValueError):
        CycleCountVector(0, ((1, 0),))
