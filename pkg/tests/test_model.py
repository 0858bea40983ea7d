import math
import warnings
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from weighted_perms.model import (
    RestrictionFamily,
    RestrictionSet,
    L_D_at_r,
    L_D_series,
    custom,
    ewens,
    g_theta_series,
    growth_condition_diagnostic,
    growth_trend_ok,
    parse_model,
    parse_restriction,
    perturbed,
    summability_diagnostic,
)
from weighted_perms.series import coefficient


def coeffs(s):
    return [coefficient(s, n) for n in range(s.order + 1)]


def test_g_theta_examples():
    assert coeffs(g_theta_series(ewens(1), 3)) == [0, 1, F(1, 2), F(1, 3)]
    assert coeffs(g_theta_series(ewens(2), 2)) == [0, 2, 1]
    assert coeffs(g_theta_series(perturbed(1, {1: 3}), 2)) == [0, 3, F(1, 2)]


def test_L_D_examples():
    assert coeffs(L_D_series(ewens(1), [], 3)) == [0, 0, 0, 0]
    assert coeffs(L_D_series(ewens(1), [2], 3)) == [0, 0, F(1, 2), 0]
    b = 6
    assert coeffs(L_D_series(ewens(1), range(1, b + 1), b)) == [0] + [F(1, m) for m in range(1, b + 1)]


def test_L_D_at_r_examples():
    assert L_D_at_r(ewens(1), []) == 0
    assert L_D_at_r(ewens(1), [1, 2]) == pytest.approx(1.5)


def test_L_x_grows_like_x_log_n():
    # L_{D_x}(r) = x vartheta log n + c + o(1); for ewens(theta) c = theta * euler_gamma.
    # The raw ratio approaches 1 monotonically; once c is removed it is within 0.05 at 10^4.
    for theta in (1, 2):
        for x in (0.5, 1.0):
            ratios, corrected = [], []
            for n in (10**2, 10**3, 10**4):
                b = math.floor(n**x + 1e-9)
                L = L_D_at_r(ewens(theta), range(1, b + 1))
                scale = x * theta * math.log(n)
                ratios.append(L / scale)
                corrected.append((L - theta * 0.5772156649015329) / scale)
            assert all(r1 > r2 > 1 for r1, r2 in zip(ratios, ratios[1:]))
            assert abs(corrected[-1] - 1) <= 0.05


def test_growth_condition_examples():
    n = 10**6
    assert growth_condition_diagnostic(n, n) == pytest.approx(math.log(n) - 1)
    n = math.exp(10)
    assert growth_condition_diagnostic(10, n) == pytest.approx(10 - math.exp(10) / 10)
    vals = [growth_condition_diagnostic(math.ceil(n**0.5), n) for n in (10**2, 10**4, 10**6)]
    assert vals[0] > vals[1] > vals[2]
    assert growth_trend_ok(RestrictionFamily("logprefix"), [100, 1000, 10000])
    with pytest.raises(ValueError):
        growth_condition_diagnostic(0, 10)


@given(st.fractions(min_value=F(1, 8), max_value=5, max_denominator=9), st.integers(1, 30))
def test_ewens_g_is_minus_theta_log(theta, N):
    # -theta log(1 - t) = sum theta t^m / m
    assert coeffs(g_theta_series(ewens(theta), N)) == [0] + [theta / m for m in range(1, N + 1)]


@given(st.integers(1, 25), st.sets(st.integers(1, 25)))
def test_L_D_plus_L_A_is_g(n, excl):
    A = RestrictionSet.from_excluded(n, excl)
    m = perturbed(2, {1: F(1, 2), 3: 5})
    total = L_D_series(m, A, n) + L_D_series(m, A.allowed, n)
    assert coeffs(total) == coeffs(g_theta_series(m, n))


def test_restriction_set_invariants():
    A = RestrictionSet.from_allowed(10, [1, 3, 5])
    assert set(A.allowed) | A.excluded == set(range(1, 11))
    assert not set(A.allowed) & A.excluded
    assert A.d_n == 10
    assert RestrictionSet(7).d_n == 1
    assert 3 in A and 4 not in A and 11 not in A


def test_restriction_presets():
    n = 100
    assert RestrictionFamily("tail", a=0.5).at(n).allowed[0] == 10
    assert all(m % 2 == 0 for m in parse_restriction("even").at(n).allowed)
    assert all(m % 2 == 1 for m in parse_restriction("odd").at(n).allowed)
    assert parse_restriction("prefix:b=3").at(n).excluded == frozenset({1, 2, 3})
    assert parse_restriction("logprefix").at(n).d_n == math.ceil(math.log(n))
    assert parse_restriction("exclude:2;5").at(n).excluded == frozenset({2, 5})
    assert parse_restriction("allow:1;3").at(n).allowed == (1, 3)
    for spec in ("full", "tail:a=0.3", "even", "odd", "prefix:b=3", "logprefix", "exclude:2;5", "allow:1;3"):
        assert parse_restriction(parse_restriction(spec).spec) == parse_restriction(spec)
    with pytest.raises(ValueError):
        parse_restriction("nonsense")


def test_model_specs_round_trip():
    for spec in ("uniform", "ewens:theta=2", "perturbed:theta=1,overrides=1:3.0;2:0.5"):
        m = parse_model(spec)
        assert parse_model(m.spec) == m
    m = parse_model("perturbed:theta=1,overrides=1:3.0;2:0.5")
    assert m.theta(1) == 3 and m.theta(2) == F(1, 2) and m.theta(7) == 1
    assert m.K == F(2) + F(-1, 4)
    with pytest.raises(ValueError):
        parse_model("mystery:theta=2")


def test_custom_model_from_csv(tmp_path):
    path = tmp_path / "w.csv"
    path.write_text("m,theta_m\n1,2\n2,1\n3,0.5\n")
    m = parse_model(f"custom:file={path},r=2,vartheta=1,K=0")
    assert [m.theta(k) for k in (1, 2, 3)] == [2, 1, F(1, 2)]
    # beyond the table the weights continue as vartheta r^-m
    assert m.theta(5) == F(1, 32)
    with pytest.raises(ValueError):
        parse_model(f"custom:file={path},r=2")


def test_custom_model_callable_and_validation():
    m = custom(lambda k: 0.5**k, r=2, vartheta=1, K=0)
    assert m.scaled_theta_array(5)[1:] == pytest.approx([1.0] * 5)
    with pytest.raises(ValueError):
        custom([-1.0], r=1, vartheta=1, K=0)
    with pytest.raises(ValueError):
        ewens(0)


def test_summability_diagnostic_warns_not_raises():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = summability_diagnostic(perturbed(1, {1: 3}), horizon=1000)
    assert rep.partial_sum == pytest.approx(2.0)
    bad = custom(lambda k: 1 + 1 / math.log(k + 1), r=1, vartheta=1, K=0)
    with pytest.warns(UserWarning):
        summability_diagnostic(bad, horizon=10**4)
    zeros = perturbed(1, {2: 0})
    with pytest.warns(UserWarning, match="forbidden"):
        summability_diagnostic(zeros, horizon=100)
