"""Weight sequences, restriction sets and their generating series."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable

import gmpy2
import numpy as np

from .series import DEFAULT_MP_PRECISION, Series, _prec

FAMILIES = ("uniform", "ewens", "finitely_perturbed", "custom")


def _exact(x) -> Fraction | float:
    """Keep exact numbers exact; strings parse as decimal fractions."""
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return x


@dataclass(frozen=True)
class WeightModel:
    """A weight sequence theta_m with its singularity data (r, vartheta, K).

    ``theta_fn`` is only used by the custom family; table-driven custom
    models keep their weights in ``table`` (theta_1, theta_2, ...) and
    continue past the table with ``vartheta * r**-m``.
    """

    family: str
    vartheta: Fraction | float = Fraction(1)
    r: Fraction | float = Fraction(1)
    K: Fraction | float = Fraction(0)
    overrides: tuple[tuple[int, Fraction | float], ...] = ()
    table: tuple = ()
    theta_fn: Callable[[int], float] | None = field(default=None, compare=True)
    source: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        if not self.vartheta > 0:
            raise ValueError("vartheta must be positive")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if self.family == "custom" and self.theta_fn is None and not self.table:
            raise ValueError("custom models need a theta evaluator or a weight table")
        for m, th in self.overrides:
            if m < 1 or th < 0:
                raise ValueError(f"bad override {m}:{th}")
        if any(th < 0 for th in self.table):
            raise ValueError("weights must be nonnegative")

    # theta ------------------------------------------------------------------

    def theta(self, m: int):
        """theta_m, exact (Fraction) whenever the inputs were exact."""
        if m < 1:
            raise ValueError("theta is indexed from 1")
        if self.family in ("uniform", "ewens"):
            return self.vartheta
        if self.family == "finitely_perturbed":
            return dict(self.overrides).get(m, self.vartheta)
        if self.theta_fn is not None:
            val = self.theta_fn(m)
        elif m <= len(self.table):
            val = self.table[m - 1]
        else:
            val = self.vartheta / self.r**m
        if val < 0:
            raise ValueError(f"theta_{m} = {val} is negative")
        return val

    def scaled_theta_array(self, N: int) -> np.ndarray:
        """theta_m * r**m for m = 0..N as float64 (index 0 is 0)."""
        return _scaled_theta_array(self, N).copy()

    @property
    def spec(self) -> str:
        if self.source:
            return self.source
        if self.family == "uniform":
            return "uniform"
        if self.family == "ewens":
            return f"ewens:theta={self.vartheta}"
        if self.family == "finitely_perturbed":
            ov = ";".join(f"{m}:{th}" for m, th in self.overrides)
            return f"perturbed:theta={self.vartheta},overrides={ov}"
        return f"custom:r={self.r},vartheta={self.vartheta},K={self.K}"


@lru_cache(maxsize=64)
def _scaled_theta_array(model: WeightModel, N: int) -> np.ndarray:
    m = np.arange(N + 1, dtype=float)
    if model.family in ("uniform", "ewens", "finitely_perturbed"):
        # r = 1 for these families
        out = np.full(N + 1, float(model.vartheta))
        for k, th in model.overrides:
            if k <= N:
                out[k] = float(th)
    else:
        th = np.array([0.0] + [float(model.theta(k)) for k in range(1, N + 1)])
        with np.errstate(divide="ignore"):
            out = np.where(th > 0, np.exp(np.log(np.where(th > 0, th, 1.0)) + m * math.log(model.r)), 0.0)
    out[0] = 0.0
    out.flags.writeable = False
    return out


def uniform() -> WeightModel:
    return WeightModel("uniform")


def ewens(theta=1) -> WeightModel:
    return WeightModel("ewens", vartheta=_exact(theta))


def perturbed(theta, overrides: dict | Iterable) -> WeightModel:
    """Ewens(theta) with finitely many theta_m replaced; K = sum (theta_m - theta)/m."""
    theta = _exact(theta)
    items = overrides.items() if isinstance(overrides, dict) else overrides
    ov = tuple(sorted((int(m), _exact(v)) for m, v in items))
    K = sum(((v - theta) / m for m, v in ov), Fraction(0))
    return WeightModel("finitely_perturbed", vartheta=theta, K=K, overrides=ov)


def custom(theta, r, vartheta, K) -> WeightModel:
    """User weights with declared singularity data.

    ``theta`` is a callable ``m -> theta_m`` or a sequence theta_1, theta_2, ...
    """
    kwargs = dict(r=_exact(r), vartheta=_exact(vartheta), K=_exact(K))
    if callable(theta):
        return WeightModel("custom", theta_fn=theta, **kwargs)
    return WeightModel("custom", table=tuple(_exact(v) for v in theta), **kwargs)


def load_weight_table(path: str) -> tuple:
    """Read ``m,theta_m`` rows (header optional) into theta_1..theta_M."""
    rows = {}
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                m = int(rec[0])
            except ValueError:
                continue  # header
            rows[m] = _exact(rec[1])
    if not rows:
        raise ValueError(f"no weights in {path}")
    M = max(rows)
    missing = [m for m in range(1, M + 1) if m not in rows]
    if missing:
        raise ValueError(f"weight table {path} misses m = {missing[:5]}")
    return tuple(rows[m] for m in range(1, M + 1))


def _parse_kv(body: str) -> dict[str, str]:
    out = {}
    for part in filter(None, body.split(",")):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_model(spec: str) -> WeightModel:
    """Parse ``uniform``, ``ewens:theta=2``, ``perturbed:theta=1,overrides=1:3;2:0.5``
    or ``custom:file=w.csv,r=1,vartheta=1,K=0``."""
    head, _, body = spec.strip().partition(":")
    kv = _parse_kv(body)
    if head == "uniform":
        model = uniform()
    elif head == "ewens":
        model = ewens(kv.get("theta", "1"))
    elif head in ("perturbed", "finitely_perturbed"):
        ov = []
        for item in filter(None, kv.get("overrides", "").split(";")):
            m, v = item.split(":")
            ov.append((int(m), v))
        model = perturbed(kv.get("theta", "1"), ov)
    elif head == "custom":
        try:
            path = kv["file"]
            r, vt, K = kv["r"], kv["vartheta"], kv["K"]
        except KeyError as exc:
            raise ValueError(f"custom model needs file, r, vartheta and K: missing {exc}") from None
        model = custom(load_weight_table(path), r, vt, K)
    else:
        raise ValueError(f"unknown model spec {spec!r}")
    return WeightModel(**{**model.__dict__, "source": spec.strip()})


# restriction sets ------------------------------------------------------------


@dataclass(frozen=True)
class RestrictionSet:
    """A_n as the complement of the excluded lengths D_n inside {1..n}."""

    n: int
    excluded: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("degree must be nonnegative")
        ex = frozenset(int(m) for m in self.excluded)
        if ex and (min(ex) < 1 or max(ex) > self.n):
            raise ValueError("excluded lengths must lie in 1..n")
        object.__setattr__(self, "excluded", ex)

    @classmethod
    def full(cls, n: int) -> "RestrictionSet":
        return cls(n)

    @classmethod
    def from_allowed(cls, n: int, allowed: Iterable[int]) -> "RestrictionSet":
        allowed = set(allowed)
        return cls(n, frozenset(m for m in range(1, n + 1) if m not in allowed))

    @classmethod
    def from_excluded(cls, n: int, excluded: Iterable[int]) -> "RestrictionSet":
        return cls(n, frozenset(m for m in excluded if 1 <= m <= n))

    def __contains__(self, m: int) -> bool:
        return 1 <= m <= self.n and m not in self.excluded

    @property
    def allowed(self) -> tuple[int, ...]:
        return tuple(m for m in range(1, self.n + 1) if m not in self.excluded)

    @property
    def d_n(self) -> int:
        return max(self.excluded) if self.excluded else 1

    @property
    def is_full(self) -> bool:
        return not self.excluded

    def mask(self, N: int | None = None) -> np.ndarray:
        """Boolean allowed-mask over indices 0..N (index 0 and indices > n are False)."""
        N = self.n if N is None else N
        out = np.zeros(N + 1, dtype=bool)
        out[1 : min(N, self.n) + 1] = True
        for m in self.excluded:
            if m <= N:
                out[m] = False
        return out

    @property
    def digest(self) -> str:
        if not self.excluded:
            return f"n={self.n};full"
        ex = sorted(self.excluded)
        if ex == list(range(ex[0], ex[-1] + 1)):
            return f"n={self.n};D={ex[0]}..{ex[-1]}"
        return f"n={self.n};D=" + ",".join(map(str, ex))


def floor_pow(n: int, x: float) -> int:
    """floor(n**x), robust to n**x landing a hair below an integer."""
    return int(math.floor(n**x + 1e-9))


def ceil_pow(n: int, x: float) -> int:
    return int(math.ceil(n**x - 1e-9))


RESTRICTION_KINDS = ("full", "tail", "even", "odd", "prefix", "logprefix", "exclude", "allow")


@dataclass(frozen=True)
class RestrictionFamily:
    """A rule n -> A_n.

    full          A_n = {1..n}
    tail(a)       A_n = {ceil(n^a)..n}
    even / odd    A_n = even / odd lengths
    prefix(b)     D_n = {1..b}
    logprefix     D_n = {1..ceil(log n)}
    exclude(L)    D_n = L intersected with {1..n}
    allow(L)      A_n = L intersected with {1..n}
    """

    kind: str = "full"
    a: float = 0.0
    b: int = 0
    lengths: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in RESTRICTION_KINDS:
            raise ValueError(f"unknown restriction kind {self.kind!r}")
        if self.kind == "tail" and not 0 <= self.a < 1:
            raise ValueError("tail restriction needs 0 <= a < 1")

    def at(self, n: int) -> RestrictionSet:
        k = self.kind
        if k == "full":
            return RestrictionSet(n)
        if k == "tail":
            lo = ceil_pow(n, self.a) if n > 0 else 1
            return RestrictionSet(n, frozenset(range(1, min(lo, n + 1))))
        if k == "even":
            return RestrictionSet(n, frozenset(range(1, n + 1, 2)))
        if k == "odd":
            return RestrictionSet(n, frozenset(range(2, n + 1, 2)))
        if k == "prefix":
            return RestrictionSet(n, frozenset(range(1, min(self.b, n) + 1)))
        if k == "logprefix":
            b = math.ceil(math.log(n)) if n > 1 else 0
            return RestrictionSet(n, frozenset(range(1, min(b, n) + 1)))
        if k == "exclude":
            return RestrictionSet.from_excluded(n, self.lengths)
        return RestrictionSet.from_allowed(n, self.lengths)

    @property
    def spec(self) -> str:
        if self.kind == "tail":
            return f"tail:a={self.a}"
        if self.kind == "prefix":
            return f"prefix:b={self.b}"
        if self.kind in ("exclude", "allow"):
            return f"{self.kind}:" + ";".join(map(str, self.lengths))
        return self.kind


def parse_restriction(spec: str) -> RestrictionFamily:
    """Parse ``full``, ``tail:a=0.3``, ``even``, ``odd``, ``prefix:b=3``,
    ``logprefix``, ``exclude:2;5`` or ``allow:1;3``."""
    head, _, body = spec.strip().partition(":")
    if head in ("full", "even", "odd", "logprefix"):
        if body:
            raise ValueError(f"{head} takes no parameters")
        return RestrictionFamily(head)
    if head == "tail":
        return RestrictionFamily("tail", a=float(_parse_kv(body)["a"]))
    if head == "prefix":
        return RestrictionFamily("prefix", b=int(_parse_kv(body)["b"]))
    if head in ("exclude", "allow"):
        lengths = tuple(sorted({int(x) for x in body.replace(",", ";").split(";") if x.strip()}))
        if not lengths and head == "allow":
            raise ValueError("allow needs at least one length")
        return RestrictionFamily(head, lengths=lengths)
    raise ValueError(f"unknown restriction spec {spec!r}")


# generating series -------------------------------------------------------------


def _index_set(D) -> frozenset:
    if isinstance(D, RestrictionSet):
        return D.excluded
    return frozenset(int(m) for m in D)


def _default_scale(model: WeightModel, kind: str, scale):
    if kind == "rational":
        if scale not in (None, 1):
            raise ValueError("rational series carry scale 1")
        return 1
    return float(model.r) if scale is None else scale


def _partial_series(model: WeightModel, N: int, kind: str, indices, scale=None,
                    precision: int | None = None, sign: int = 1) -> Series:
    """sum_{m in indices, m <= N} theta_m / m t^m (``indices=None`` means all m)."""
    if N < 0:
        raise ValueError("truncation order must be nonnegative")
    scale = _default_scale(model, kind, scale)
    if kind in ("float", "complex"):
        th = model.scaled_theta_array(N)
        if scale != float(model.r):
            th = th * (scale / float(model.r)) ** np.arange(N + 1)
        c = np.zeros(N + 1)
        c[1:] = th[1:] / np.arange(1, N + 1)
        if indices is not None:
            keep = np.zeros(N + 1, dtype=bool)
            idx = [m for m in indices if 1 <= m <= N]
            keep[idx] = True
            c[~keep] = 0.0
        return Series(sign * c.astype(complex if kind == "complex" else float), kind, scale)
    rng = range(1, N + 1) if indices is None else sorted(m for m in indices if 1 <= m <= N)
    vals = [0] * (N + 1)
    for m in rng:
        vals[m] = sign * Fraction(model.theta(m)) / m
    if kind == "rational":
        return Series.from_coeffs(vals, "rational")
    return Series.from_coeffs(vals, "mpfloat", scale, precision or DEFAULT_MP_PRECISION)


def g_theta_series(model: WeightModel, N: int, kind: str = "rational", scale=None,
                   precision: int | None = None) -> Series:
    """g(t) = sum_m theta_m / m t^m truncated at order N."""
    return _partial_series(model, N, kind, None, scale, precision)


def L_D_series(model: WeightModel, D, N: int, kind: str = "rational", scale=None,
               precision: int | None = None) -> Series:
    """L_D(t) = sum_{m in D} theta_m / m t^m; ``D`` is a RestrictionSet (its
    excluded lengths) or any iterable of lengths."""
    return _partial_series(model, N, kind, _index_set(D), scale, precision)


def allowed_series(model: WeightModel, A: RestrictionSet, N: int | None = None,
                   kind: str = "rational", scale=None, precision: int | None = None) -> Series:
    """g - L_D built directly, so excluded coefficients are exact zeros."""
    N = A.n if N is None else N
    return _partial_series(model, N, kind, A.allowed if A.excluded else range(1, A.n + 1),
                           scale, precision)


def L_D_at_r(model: WeightModel, D) -> float:
    """sum_{m in D} theta_m r^m / m in floating point."""
    idx = np.array(sorted(_index_set(D)), dtype=int)
    if idx.size == 0:
        return 0.0
    th = model.scaled_theta_array(int(idx.max()))
    return float(np.sum(th[idx] / idx))


def L_D_at_r_mp(model: WeightModel, D, precision: int = DEFAULT_MP_PRECISION):
    """High-precision twin of :func:`L_D_at_r` (theta and r taken exactly)."""
    with _prec(precision):
        r = gmpy2.mpfr(_mp_exact(model.r))
        total = gmpy2.mpfr(0)
        for m in sorted(_index_set(D)):
            total += gmpy2.mpfr(_mp_exact(model.theta(m))) * r**m / m
        return total


def _mp_exact(x):
    if isinstance(x, Fraction):
        return gmpy2.mpq(x.numerator, x.denominator)
    return x


def growth_condition_diagnostic(d_n: int, n: int, C: float = 1.0) -> float:
    """C log n - n / d_n; must tend to -infinity for the asymptotics to hold."""
    if n < 2 or d_n < 1:
        raise ValueError("need n >= 2 and d_n >= 1")
    return C * math.log(n) - n / d_n


def growth_trend_ok(family: RestrictionFamily, ladder: Iterable[int], C: float = 1.0) -> bool:
    vals = [growth_condition_diagnostic(family.at(n).d_n, n, C) for n in ladder]
    return all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 0


@dataclass(frozen=True)
class SummabilityReport:
    partial_sum: float
    last_decade: float
    horizon: int
    zero_weights: int


def summability_diagnostic(model: WeightModel, horizon: int = 10**6) -> SummabilityReport:
    """Partial sum of |theta_m r^m - vartheta| / m up to ``horizon``.

    Warns (never raises) when the last decade still contributes noticeably or
    when some theta_m vanish.
    """
    th = model.scaled_theta_array(horizon)[1:]
    m = np.arange(1, horizon + 1)
    terms = np.abs(th - float(model.vartheta)) / m
    total = float(terms.sum())
    last = float(terms[horizon // 10 :].sum())
    zeros = int(np.count_nonzero(th == 0))
    if last > 1e-3 * max(total, 1e-12) and last > 1e-8:
        warnings.warn(f"theta_m r^m - vartheta does not look summable: last decade adds {last:.3g}")
    if zeros:
        warnings.warn(f"{zeros} weights vanish up to m = {horizon}; those lengths are forbidden")
    return SummabilityReport(total, last, horizon, zeros)
