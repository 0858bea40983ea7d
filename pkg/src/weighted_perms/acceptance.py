"""The ten acceptance criteria, each runnable on its own.

Every function returns a :class:`CriterionResult`; ``passed`` requires both
the numerical condition and the runtime budget.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import harness
from .exact import (
    DegenerateMeasureError,
    block_count_law,
    brute_force_h,
    brute_force_oracle,
    ell1_law,
    h_n,
    h_table,
    total_cycles_law,
)
from .model import RestrictionFamily, ewens, parse_restriction, perturbed, uniform

SEEDS = harness.THRESHOLDS["seeds"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    elapsed: float
    budget: float
    detail: str = ""
    reports: list = field(default_factory=list)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"criterion {self.number:2d} [{tag}] {self.title}: {self.detail} "
                f"({self.elapsed:.1f} s of {self.budget:.0f} s)")


def _run(number: int, title: str, budget: float, body: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail, reports = body()
    elapsed = time.perf_counter() - t0
    if elapsed > budget:
        detail += "; over the runtime budget"
    return CriterionResult(number, title, bool(ok) and elapsed <= budget, elapsed, budget, detail, reports)


def _hard_ok(rep) -> bool:
    return all(c.passed for c in rep.checks if c.hard)


def _failed(reps) -> str:
    bad = [f"{r.quantity}:{c.name}" for r in reps for c in r.checks if c.hard and not c.passed]
    return "; failed " + ", ".join(bad) if bad else ""


# 1 ---------------------------------------------------------------------------------------

BUILTIN_MODELS = (uniform(), ewens(2), perturbed(1, {1: 3, 2: Fraction(1, 2)}))
EXACTNESS_RESTRICTIONS = ("full", "odd", "exclude:2", "prefix:b=2")


def _as_dict(law) -> dict:
    return {k: p for k, p in zip(law.support, law.probs) if p != 0}


def criterion_1() -> CriterionResult:
    def body():
        mismatches, cases = [], 0
        for model in BUILTIN_MODELS:
            for spec in EXACTNESS_RESTRICTIONS:
                fam = parse_restriction(spec)
                for n in range(1, 9):
                    A = fam.at(n)
                    cases += 1
                    h_series, h_brute = h_n(model, A), brute_force_h(model, A)
                    if h_series != h_brute:
                        mismatches.append((model.spec, spec, n, "h_n"))
                        continue
                    if h_brute == 0:
                        try:
                            total_cycles_law(model, A)
                            mismatches.append((model.spec, spec, n, "degenerate not flagged"))
                        except DegenerateMeasureError:
                            pass
                        continue
                    pairs = [
                        ("T", total_cycles_law(model, A), brute_force_oracle(model, A, "T")),
                        ("C1", block_count_law(model, A, [1]), None),
                        ("ell1", ell1_law(model, A), brute_force_oracle(model, A, "ell1")),
                    ]
                    c1 = brute_force_oracle(model, A, "C", M=[1])
                    for name, series_law, brute_law in pairs:
                        if name == "C1":
                            want = {k[0]: p for k, p in _as_dict(c1).items()}
                        else:
                            want = _as_dict(brute_law)
                        if _as_dict(series_law) != want:
                            mismatches.append((model.spec, spec, n, name))
        ok = not mismatches
        return ok, f"{cases} (model, restriction, n) cases, {len(mismatches)} mismatches {mismatches[:3] if mismatches else ''}".rstrip(), []

    return _run(1, "exactness vs brute force", 10, body)


# 2 ---------------------------------------------------------------------------------------


def criterion_2() -> CriterionResult:
    def body():
        model = ewens(2)
        th = model.vartheta
        closed = [Fraction(1)]
        for n in range(1, 2001):
            closed.append(closed[-1] * (th + n - 1) / n)
        hq = h_table(model, None, n=50, kind="rational")
        exact_ok = all(Fraction(int(c.numerator), int(c.denominator)) == closed[n] for n, c in enumerate(hq.coeffs))
        hf = h_table(model, None, n=2000, kind="float").coeffs
        worst = max(abs(float(hf[n]) - float(closed[n])) / float(closed[n]) for n in range(2001))
        return exact_ok and worst <= 1e-10, f"rational n<=50 exact: {exact_ok}; float n<=2000 max rel err {worst:.2e}", []

    return _run(2, "closed-form h_n for ewens(2)", 30, body)


# 3 ---------------------------------------------------------------------------------------


def criterion_3() -> CriterionResult:
    def body():
        rep = harness.verify_hn_asymptotics(ewens(1), RestrictionFamily("logprefix"), [200, 400, 800, 1600])
        ratio = rep.info["ratios"]
        logs = ", ".join(f"{v:.1f}" for v in rep.info["log10_error"])
        detail = f"log10 rel err [{logs}], mean ratio {sum(ratio) / len(ratio):.3g}"
        return _hard_ok(rep), detail + _failed([rep]), [rep]

    return _run(3, "h_n asymptotic ladder, D_n = {1..ceil(log n)}", 60, body)


# 4 ---------------------------------------------------------------------------------------


def criterion_4() -> CriterionResult:
    def body():
        rep = harness.verify_poisson_cycle_counts(uniform(), RestrictionFamily("full"), [1], [100, 200, 400])
        tv = {row["n"]: row["distance"] for row in rep.rows}
        logs = dict(zip(rep.ladder, rep.info["log10_tv"]))
        ok = tv[100] <= 0.02 and logs[400] < logs[100]
        detail = f"log10 TV at n=100: {logs[100]:.1f}, n=400: {logs[400]:.1f}"
        return ok, detail, [rep]

    return _run(4, "Poisson limit of C_1 (uniform)", 10, body)


# 5 ---------------------------------------------------------------------------------------


def criterion_5() -> CriterionResult:
    def body():
        reps, parts, ok = [], [], True
        for model in (uniform(), ewens(2)):
            rep = harness.verify_mod_poisson_T(model, RestrictionFamily("full"), [100, 316, 1000])
            dev = {row["n"]: row["distance"] for row in rep.rows}
            ok &= dev[1000] <= dev[100]
            parts.append(f"{model.spec}: {dev[100]:.2e} -> {dev[1000]:.2e}")
            reps.append(rep)
        return ok, "; ".join(parts), reps

    return _run(5, "mod-Poisson residue", 120, body)


# 6 ---------------------------------------------------------------------------------------


def criterion_6() -> CriterionResult:
    def body():
        rep = harness.verify_clt_T(ewens(1), RestrictionFamily("full"), [1000, 10000, 100000], 10000, SEEDS["clt"])
        rows = {(r["n"], r["quantity"]): r for r in rep.rows}
        m = rows[(100000, "mean")]["empirical"]
        v = rows[(100000, "variance")]["empirical"]
        ks = [rows[(n, "ks")]["distance"] for n in (1000, 10000, 100000)]
        ok = abs(m) <= 0.05 and 0.85 <= v <= 1.15 and ks[0] > ks[1] > ks[2]
        detail = f"mean {m:+.4f}, var {v:.4f}, KS {ks[0]:.4f} > {ks[1]:.4f} > {ks[2]:.4f}"
        return ok, detail, [rep]

    return _run(6, "CLT for T", 300, body)


# 7 ---------------------------------------------------------------------------------------


def criterion_7() -> CriterionResult:
    def body():
        rep = harness.verify_pd_large_cycles(ewens(1), RestrictionFamily("full"), 10000, 10000, SEEDS["pd"],
                                             n_exact=2000)
        mom = [r for r in rep.rows if r["quantity"].startswith("E[(l1/n)^") and not r["quantity"].endswith("0]")]
        worst = max(r["distance"] for r in mom)
        first = next(r for r in rep.rows if r["quantity"] == "l(1)/n mean")
        diff = abs(first["empirical"] - first["predicted"])
        ok = worst <= 5e-3 and diff <= 0.01
        detail = (f"max moment gap {worst:.2e}; E[l(1)/n] {first['empirical']:.4f} vs oracle "
                  f"{first['predicted']:.4f} (se {rep.info['oracle_se']:.1e})")
        return ok, detail, [rep]

    return _run(7, "Poisson-Dirichlet moments and largest cycle", 300, body)


# 8 ---------------------------------------------------------------------------------------


def criterion_8() -> CriterionResult:
    def body():
        reps, parts, ok = [], [], True
        for model in BUILTIN_MODELS:
            rep = harness.verify_samplers(model, RestrictionFamily("full"), 8, 100000, SEEDS["samplers"])
            tv = next(r["distance"] for r in rep.rows if r["quantity"].startswith("tv"))
            ps = [c.value for c in rep.checks if c.name.startswith("chi2")]
            ok &= tv <= 0.02 and all(p > 1e-3 for p in ps)
            parts.append(f"{model.spec}: TV {tv:.4f}, chi2 p {ps[0]:.3f}/{ps[1]:.3f}")
            reps.append(rep)
        return ok, "; ".join(parts), reps

    return _run(8, "sampler cross-validation at n = 8", 120, body)


# 9 ---------------------------------------------------------------------------------------


def criterion_9() -> CriterionResult:
    def body():
        rep = harness.verify_flt(ewens(1), RestrictionFamily("full"), [0.25, 0.5, 0.75], [100000], 10000,
                                 SEEDS["flt"])
        var = {r["quantity"]: r["empirical"] for r in rep.rows if r["quantity"].startswith("var")}
        corr = next(r["empirical"] for r in rep.rows if r["quantity"].startswith("corr"))
        slope = next(c.value for c in rep.checks if c.name.startswith("tightness"))
        detail = (", ".join(f"{k} {v:.3f}" for k, v in var.items())
                  + f"; increment corr {corr:+.4f}; tightness slope {slope:.2f}")
        return _hard_ok(rep), detail + _failed([rep]), [rep]

    return _run(9, "functional CLT", 600, body)


# 10 --------------------------------------------------------------------------------------


def criterion_10() -> CriterionResult:
    def body():
        r1 = harness.verify_flt_restricted(ewens(1), 0.3, [0.1, 0.25, 0.5, 0.8], [100000], 10000,
                                           SEEDS["flt_restricted"])
        r2 = harness.verify_flt_parity(uniform(), [0.25, 0.5, 0.75, 1.0], [100000], 10000, SEEDS["flt_parity"])
        var = {r["quantity"]: r["empirical"] for r in r1.rows if r["quantity"].startswith("var")}
        profile_ok = all(abs(var[f"var(x={x})"] - max(x - 0.3, 0)) <= 0.1 for x in (0.1, 0.25, 0.5, 0.8))
        corr_row = next(r for r in r2.rows if r["quantity"] == "corr(ev(1),odd(1))")
        corr = corr_row["empirical"]
        errs = {r["n"]: r["distance"] for r in r2.rows if r["quantity"].startswith("max |exact parity")}
        ok = profile_ok and corr <= 0.05 and errs[500] < errs[250] and _hard_ok(r1) and _hard_ok(r2)
        detail = (", ".join(f"{k} {v:.3f}" for k, v in var.items())
                  + f"; corr(ev(1),odd(1)) {corr:+.4f} (exact finite-n {corr_row['exact']:+.4f})"
                  + f"; parity char error n=250 {errs[250]:.2e}, n=500 {errs[500]:.2e}")
        return ok, detail + _failed([r1, r2]), [r1, r2]

    return _run(10, "restricted and parity variants", 600, body)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 11)}


def run_all(numbers=None, echo: Callable[[str], None] | None = print) -> list[CriterionResult]:
    out = []
    for i in numbers or sorted(CRITERIA):
        res = CRITERIA[i]()
        if echo:
            echo(res.line())
        out.append(res)
    return out
