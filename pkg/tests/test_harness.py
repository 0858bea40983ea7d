import io
import json
import math
from fractions import Fraction as F

import pytest

from weighted_perms import harness
from weighted_perms.exact import ell1_law
from weighted_perms.harness import ComparisonReport, chi2_against, tv_distance, tv_noise_floor
from weighted_perms.model import RestrictionFamily, RestrictionSet, ewens, perturbed, uniform


def test_tv_distance():
    assert tv_distance({0: F(1, 2), 1: F(1, 2)}, {0: F(1, 4), 2: F(3, 4)}) == F(3, 4)
    assert tv_distance({0: 0.5, 1: 0.5}, {0: 0.5, 1: 0.5}) == 0


def test_chi2_against_pools_small_cells():
    law = {0: 0.5, 1: 0.49, 2: 0.01}
    stat, p, dof = chi2_against({0: 50, 1: 49, 2: 1}, law, 100)
    assert dof == 2  # the expected-count-1 cell becomes the pooled cell
    assert p > 0.9
    _, p_bad, _ = chi2_against({0: 90, 1: 10}, {0: 0.5, 1: 0.5}, 100)
    assert p_bad < 1e-10


def test_ladder_check_logic():
    rep = ComparisonReport("q", [1, 2, 3, 4])
    rep.ladder_check("ok", [4, 3, 2, 1], [1, 2, 3, 4])
    assert rep.verdict == "pass"
    rep.ladder_check("one step", [4, 5, 2, 1], [1, 2, 3, 4])
    assert rep.verdict == "warn"
    rep.ladder_check("two steps", [4, 5, 6, 1], [1, 2, 3, 4])
    assert rep.verdict == "fail"
    with pytest.raises(ValueError):
        rep.ladder_check("short", [2, 1], [1, 2])


def test_report_serialization(tmp_path):
    rep = ComparisonReport("q", [10, 20])
    rep.add_row(10, "x", exact=F(1, 3), predicted=0.25, empirical=0.3, distance=1e-300)
    rep.add_row(20, "y", predicted=1 + 2j)
    rep.check("c", 0.1, 0.2, True)
    d = json.loads(rep.to_json(tmp_path / "r.json"))
    assert d == json.loads((tmp_path / "r.json").read_text())
    assert d["verdict"] == "pass" and d["rows"][0]["exact"] == "1/3"
    buf = io.StringIO()
    rep.to_csv(stream=buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "n,quantity,exact,predicted,empirical,distance"
    assert float(lines[1].split(",")[-1]) == 1e-300
    assert "[ok  ] c" in rep.summary()


def test_poisson_cycle_counts_example():
    rep = harness.verify_poisson_cycle_counts(uniform(), RestrictionFamily("full"), [1], [100])
    assert rep.rows[0]["distance"] <= 0.02
    assert rep.verdict == "pass"


def test_poisson_product_structure():
    model = perturbed(1, {1: 3, 2: F(1, 2)})
    rep = harness.verify_poisson_cycle_counts(model, None, [1, 2], [10, 20, 40], tv_max=1.0)
    prod = [r["distance"] for r in rep.rows if r["quantity"] == "tv_product_of_marginals"]
    assert prod[0] > prod[1] > prod[2]
    assert rep.verdict == "pass"


def test_poisson_small_n_fails_threshold():
    rep = harness.verify_poisson_cycle_counts(uniform(), None, [1], [3, 4, 5])
    assert rep.verdict == "fail"


def test_poisson_escape_error():
    with pytest.raises(ValueError, match="escapes"):
        harness.verify_poisson_cycle_counts(uniform(), RestrictionFamily("odd"), [2], [10])


def test_mod_poisson():
    rep = harness.verify_mod_poisson_T(uniform(), None, [100, 1000], [-1.0, 0.0, 0.5, 1.2])
    assert rep.verdict == "pass"
    assert any(c.name.startswith("residue at s=0") and c.passed for c in rep.checks)
    rep = harness.verify_mod_poisson_T(ewens(2), RestrictionFamily("logprefix"), [100, 316, 1000])
    assert rep.verdict == "pass"


def test_uniform_ell1_mean():
    n = 1000
    law = ell1_law(uniform(), RestrictionSet(n))
    m = law.expectation() / n
    assert m == F(n + 1, 2 * n)
    assert abs(m - F(1, 2)) <= F(2, n)


def test_pd_small_run():
    rep = harness.verify_pd_large_cycles(ewens(1), None, 2000, 2000, 3, n_exact=300, gem_draws=20000)
    zero = next(r for r in rep.rows if r["quantity"] == "E[(l1/n)^0]")
    assert zero["exact"] == pytest.approx(1, abs=1e-12) and zero["predicted"] == 1
    assert rep.verdict in ("pass", "warn")
    with pytest.warns(UserWarning, match="derivative condition"):
        from weighted_perms.model import custom
        harness.verify_pd_large_cycles(custom([1.0] * 5, r=1, vartheta=1, K=0), None, 50, 100, 3,
                                       gem_draws=1000)


def test_flt_restricted_zero_below_a():
    rep = harness.verify_flt_restricted(ewens(1), 0.5, [0.25, 0.75], [400], 500, seed=5)
    zero = next(c for c in rep.checks if c.name.startswith("B_n(0.25) == 0"))
    assert zero.passed
    row = next(r for r in rep.rows if r["quantity"] == "var(x=0.25)")
    assert row["empirical"] == 0 and row["exact"] == 0


def test_flt_restricted_a0_is_flt():
    a = harness.verify_flt_restricted(ewens(1), 0.0, [0.5], [300], 400, seed=6)
    b = harness.verify_flt(ewens(1), RestrictionFamily("full"), [0.5], [300], 400, seed=6)
    assert a.rows == b.rows


def test_flt_exact_variance_tracks_samples():
    rep = harness.verify_flt(ewens(1), None, [0.5], [2000], 4000, seed=8)
    row = next(r for r in rep.rows if r["quantity"] == "var(x=0.5)")
    assert abs(row["empirical"] - row["exact"]) < 5 * row["exact"] * math.sqrt(2 / 4000)


def test_samplers_small():
    rep = harness.verify_samplers(ewens(2), None, 5, 20000, seed=4)
    assert rep.verdict == "pass"


def test_noise_floor():
    law = {0: 0.5, 1: 0.5}
    assert tv_noise_floor(law, 10**4) == pytest.approx(math.sqrt(2 * 0.25 / 10**4) * math.sqrt(2 / math.pi))


def test_reproducible_verdicts():
    def once():
        harness.clear_sample_cache()
        return harness.verify_clt_T(ewens(1), None, [100, 1000, 10000], 1000, seed=12).to_dict()

    assert once() == once()


def test_thresholds_fixture():
    th = harness.THRESHOLDS
    assert th["chi2_alpha"] == 0.001 and th["seeds"]["gem"] != th["seeds"]["clt"]
    assert "pilot" in th
