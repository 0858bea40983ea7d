"""Leading-order singularity-analysis predictions.

All coefficient predictions are returned in r^n-rescaled form by default, so
they pair directly with series stored at scale r.  Error orders are carried
as tags; they are checked empirically on n-ladders, never added numerically.
"""
from __future__ import annotations

import cmath
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

from .gamma import complex_gamma, reciprocal_gamma
from .model import (
    RestrictionSet,
    WeightModel,
    L_D_at_r,
    L_D_at_r_mp,
    _index_set,
    _mp_exact,
    floor_pow,
)
from .series import _prec

UNIFORMITY_RADIUS = 2.0

ERROR_ORDERS = ("O(dbar_n/n)", "O(n^(x-1))", "o(1)", "O(n^(max(Re w2,0)-1))")


@dataclass(frozen=True)
class Prediction:
    quantity: str
    value: complex
    error_order: str
    inputs: dict = field(default_factory=dict)
    scaled: bool = True
    hp_value: object = None

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"non-finite prediction for {self.quantity}: {v}")
        object.__setattr__(self, "value", v)

    @property
    def inputs_digest(self) -> str:
        blob = json.dumps(self.inputs, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_record(self) -> dict:
        return {
            "quantity": self.quantity,
            "n": self.inputs.get("n"),
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "error_order": self.error_order,
            "inputs_digest": self.inputs_digest,
        }


def _f(x) -> float:
    return float(x)


def _check_uniformity(**params):
    for name, z in params.items():
        zs = z if isinstance(z, (list, tuple)) else [z]
        for val in zs:
            if abs(complex(val)) > UNIFORMITY_RADIUS:
                warnings.warn(f"|{name}| = {abs(complex(val)):.3g} exceeds the validated radius {UNIFORMITY_RADIUS}")


def _dbar(restrictions: Sequence) -> int:
    best = 1
    for D in restrictions:
        idx = _index_set(D)
        if idx:
            best = max(best, max(idx))
    return best


def _scaled_factor(model: WeightModel, n: int, b: int, scaled: bool) -> complex:
    """r^b in rescaled units, r^-(n-b) otherwise (via logs)."""
    lr = math.log(_f(model.r))
    return cmath.exp(b * lr) if scaled else cmath.exp(-(n - b) * lr)


def predict_coefficient(model: WeightModel, restrictions: Sequence, w: complex, v: Sequence[complex],
                        n: int, b: int = 0, scaled: bool = True) -> Prediction:
    """[t^(n-b)] exp(w g(t) + sum_j v_j L_{D_j}(t)) to leading order:

        e^{Kw} n^{w vartheta - 1} r^{-(n-b)} exp(sum_j v_j L_{D_j}(r)) / Gamma(w vartheta).
    """
    if len(restrictions) != len(v):
        raise ValueError("one v_j per restriction")
    w = complex(w)
    _check_uniformity(w=w, v=list(v))
    th, K = _f(model.vartheta), _f(model.K)
    rg = reciprocal_gamma(w * th)
    if rg == 0:
        value = 0j
    else:
        expo = K * w + (w * th - 1) * math.log(n)
        expo += sum(complex(vj) * L_D_at_r(model, D) for vj, D in zip(v, restrictions))
        value = cmath.exp(expo) * rg * _scaled_factor(model, n, b, scaled)
    dbar = _dbar(restrictions)
    return Prediction("coefficient", value, "O(dbar_n/n)",
                      {"n": n, "model": model.spec, "w": str(w), "v": [str(complex(x)) for x in v],
                       "b": b, "dbar_n": dbar,
                       "restrictions": [sorted(_index_set(D)) for D in restrictions]},
                      scaled)


def predict_h_n(model: WeightModel, A: RestrictionSet, n: int | None = None, scaled: bool = True,
                precision: int | None = None) -> Prediction:
    """h_n(A_n) ~ exp(-L_D(r)) n^{vartheta-1} e^K / (r^n Gamma(vartheta)).

    With ``precision`` the same expression is also evaluated in MPFR
    (``hp_value``, rescaled), for comparisons below double precision.
    """
    n = A.n if n is None else n
    p = predict_coefficient(model, [A], 1, [-1], n, 0, scaled)
    hp = None
    if precision:
        with _prec(precision):
            th = gmpy2.mpfr(_mp_exact(model.vartheta))
            K = gmpy2.mpfr(_mp_exact(model.K))
            hp = gmpy2.exp(-L_D_at_r_mp(model, A, precision) + K + (th - 1) * gmpy2.log(n)) / gmpy2.gamma(th)
            if not scaled:
                hp = hp / gmpy2.mpfr(_mp_exact(model.r)) ** n
    inputs = dict(p.inputs, restriction=A.digest, d_n=A.d_n)
    return Prediction("h_n", p.value, "O(dbar_n/n)", inputs, scaled, hp)


def mod_poisson_parameter(model: WeightModel, A: RestrictionSet) -> float:
    """lambda_n = K + vartheta log n - L_{D_n}(r)."""
    return _f(model.K) + _f(model.vartheta) * math.log(A.n) - L_D_at_r(model, A)


def mod_poisson_limit(model: WeightModel, s: float) -> complex:
    """Gamma(vartheta) / Gamma(vartheta e^{is})."""
    th = complex(_f(model.vartheta))
    z = th * cmath.exp(1j * s)
    rg = reciprocal_gamma(z)
    # same argument on both sides at s = 0, so the ratio is exactly 1 there
    return 0j if rg == 0 else complex_gamma(th) / complex_gamma(z)


def predict_char_T(model: WeightModel, A: RestrictionSet, s: float, n: int | None = None) -> Prediction:
    """E[e^{isT}] ~ exp((e^{is}-1) lambda_n) Gamma(vartheta)/Gamma(e^{is} vartheta)."""
    n = A.n if n is None else n
    z = cmath.exp(1j * s) - 1
    value = cmath.exp(z * mod_poisson_parameter(model, A)) * mod_poisson_limit(model, s)
    return Prediction("char_T", value, "O(dbar_n/n)",
                      {"n": n, "model": model.spec, "s": s, "restriction": A.digest, "d_n": A.d_n})


def D_x(n: int, x: float, A: RestrictionSet | None = None) -> list[int]:
    """{1..floor(n^x)}, intersected with A_n when given."""
    b = floor_pow(n, x)
    return [m for m in range(1, b + 1) if A is None or m in A]


def predict_char_B(model: WeightModel, n: int, x: float, s: float,
                   A: RestrictionSet | None = None) -> Prediction:
    """E[e^{is B_n(x)}] ~ exp((e^{is}-1) L_{D_x}(r)) for 0 <= x < 1."""
    if not 0 <= x < 1:
        raise ValueError("x must lie in [0, 1)")
    L = L_D_at_r(model, D_x(n, x, A))
    value = cmath.exp((cmath.exp(1j * s) - 1) * L)
    return Prediction("char_B", value, "O(n^(x-1))",
                      {"n": n, "model": model.spec, "x": x, "s": s,
                       "restriction": None if A is None else A.digest})


@dataclass(frozen=True)
class AlternatingSum:
    value: float
    method: str
    oscillation: float
    horizon: int


def g_at_minus_r(model: WeightModel, horizon: int = 10**6, tol: float = 1e-12) -> AlternatingSum:
    """g(-r) = sum_m theta_m (-r)^m / m by direct summation.

    Falls back to averaging the partial sums over the second half of the
    horizon when the plain partial sums still oscillate by more than ``tol``.
    """
    th = model.scaled_theta_array(horizon)[1:]
    m = np.arange(1, horizon + 1)
    terms = np.where(m % 2 == 0, 1.0, -1.0) * th / m
    partial = np.cumsum(terms)
    if not np.all(np.isfinite(partial)):
        raise ValueError("g(-r) diverges: non-finite partial sums")
    osc = float(abs(partial[-1] - partial[-2]))
    if osc <= tol:
        return AlternatingSum(float(partial[-1]), "direct", osc, horizon)
    tail = partial[horizon // 2 :]
    first, second = float(tail[: len(tail) // 2].mean()), float(tail[len(tail) // 2 :].mean())
    if abs(first - second) > max(1e3 * tol, 1e-6):
        raise ValueError(f"g(-r) diverges: averaged partial sums still drift by {abs(first - second):.3g}")
    return AlternatingSum(float(tail.mean()), "cesaro", osc, horizon)


def predict_coefficient_two_sing(model: WeightModel, w1: complex, w2: complex, n: int,
                                 restrictions: Sequence = (), v: Sequence[complex] = (), b: int = 0,
                                 scaled: bool = True, g_minus_r: float | None = None) -> Prediction:
    """[t^(n-b)] exp(w1 g(t) + w2 g(-t) + sum v_j L_{D_j}(t)):

        e^{K w1} n^{w1 vartheta - 1} e^{w2 g(-r)} r^{-(n-b)} exp(sum v_j L_{D_j}(r)) / Gamma(w1 vartheta).
    """
    w1, w2 = complex(w1), complex(w2)
    if w1.real < 0:
        raise ValueError("need Re w1 >= 0")
    base = predict_coefficient(model, restrictions, w1, v, n, b, scaled)
    if w2 != 0:
        gm = g_at_minus_r(model).value if g_minus_r is None else g_minus_r
        value = base.value * cmath.exp(w2 * gm)
    else:
        value = base.value
    inputs = dict(base.inputs, w1=str(w1), w2=str(w2))
    order = "O(dbar_n/n) + O(n^(max(Re w2,0)-1))"
    return Prediction("coefficient_two_sing", value, order, inputs, scaled)


def predict_char_parity(model: WeightModel, n: int, s_even: float, s_odd: float) -> Prediction:
    """Joint characteristic function of (B^ev(1), B^odd(1)) from the two-singularity form."""
    e1, e2 = cmath.exp(1j * s_even), cmath.exp(1j * s_odd)
    num = predict_coefficient_two_sing(model, (e1 + e2) / 2, (e1 - e2) / 2, n)
    den = predict_h_n(model, RestrictionSet(n))
    return Prediction("char_parity", num.value / den.value, num.error_order,
                      dict(num.inputs, s_even=s_even, s_odd=s_odd))


def pd_moment_limit(vartheta, b: int):
    """E[B^b] for B ~ Beta(1, vartheta): b! Gamma(vartheta+1)/Gamma(vartheta+b+1).

    Exact (Fraction) for exact vartheta.
    """
    if b < 0:
        raise ValueError("b >= 0")
    if isinstance(vartheta, (int, Fraction)):
        out = Fraction(1)
        for j in range(1, b + 1):
            out *= Fraction(j) / (vartheta + j)
        return out
    out = 1.0
    for j in range(1, b + 1):
        out *= j / (vartheta + j)
    return out


def beta_family_prediction(model: WeightModel, kind: str, n: int, *, beta: float = 0.0,
                           amplitude: complex = 1.0, poly_at_r: complex | None = None,
                           restrictions: Sequence = (), v: Sequence[complex] = (),
                           scaled: bool = True) -> Prediction:
    """Leading term of [t^n] f(t) exp(g(t) + sum v_j L_{D_j}(t)).

    ``f_singular``: f(t) = amplitude (1 - t/r)^{-beta} (1 + O(t - r)), giving
        amplitude e^K n^{vartheta+beta-1} exp(sum v_j L_j(r)) / (r^n Gamma(vartheta+beta)).
    ``polynomial_factor``: f = P_n with P_n(r(1 + 1/d_n)) ~ P_n(r); pass P_n(r) as
        ``poly_at_r``, giving P_n(r) e^K n^{vartheta-1} exp(...) / (r^n Gamma(vartheta)).
    """
    th, K = _f(model.vartheta), _f(model.K)
    Lsum = sum(complex(vj) * L_D_at_r(model, D) for vj, D in zip(v, restrictions))
    scale = 1.0 if scaled else math.exp(-n * math.log(_f(model.r)))
    if kind == "f_singular":
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        value = (complex(amplitude) * cmath.exp(K + (th + beta - 1) * math.log(n) + Lsum)
                 * reciprocal_gamma(th + beta) * scale)
        tag = "O(dbar_n/n)"
    elif kind == "polynomial_factor":
        if poly_at_r is None:
            raise ValueError("polynomial_factor needs poly_at_r = P_n(r)")
        value = complex(poly_at_r) * cmath.exp(K + (th - 1) * math.log(n) + Lsum) * reciprocal_gamma(th) * scale
        tag = "o(1)"
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return Prediction(f"beta_family:{kind}", value, tag,
                      {"n": n, "model": model.spec, "beta": beta, "dbar_n": _dbar(restrictions)}, scaled)


# ladder helpers ---------------------------------------------------------------------


def consecutive_ratios(errors: Sequence[float]) -> list[float]:
    return [b / a for a, b in zip(errors, errors[1:])]


def mean_ratio(errors: Sequence[float]) -> float:
    return float(np.mean(consecutive_ratios(errors)))


def fit_power_law(ns: Sequence[float], errors: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of errors ~ C n^{-gamma}; returns (C, gamma)."""
    slope, intercept = np.polyfit(np.log(ns), np.log(errors), 1)
    return float(math.exp(intercept)), float(-slope)


def estimate_L_x_constant(model: WeightModel, x: float, n: int) -> float:
    """c in L_{D_x}(r) = x vartheta log n + c + o(1), estimated at one n."""
    return L_D_at_r(model, D_x(n, x)) - x * _f(model.vartheta) * math.log(n)
