"""Exact finite-n laws of cycle statistics.

Everything here is coefficient extraction from exp(sum_{m in A} theta_m/m t^m)
and its marked variants, plus a brute-force sum over partitions used as the
independent oracle.
"""
from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import gmpy2
import numpy as np

from .model import (
    RestrictionFamily,
    RestrictionSet,
    WeightModel,
    _default_scale,
    allowed_series,
    floor_pow,
    L_D_series,
)
from .series import (
    DEFAULT_MP_PRECISION,
    Series,
    _exp_array,
    _exp_scalar,
    _prec,
    coefficient,
    series_exp,
    series_scale,
)


class DegenerateMeasureError(ValueError):
    """h_n(A_n) = 0: no permutation of degree n has all cycle lengths in A_n."""


def resolve_restriction(A, n: int | None) -> RestrictionSet:
    if A is None:
        if n is None:
            raise ValueError("need a degree n")
        return RestrictionSet(n)
    if isinstance(A, RestrictionFamily):
        if n is None:
            raise ValueError("a restriction family needs a degree n")
        return A.at(n)
    if n is not None and n != A.n:
        raise ValueError(f"restriction set is for n = {A.n}, asked for n = {n}")
    return A


# h-tables -----------------------------------------------------------------------


class _ExpTable:
    """Coefficients of exp(sum_{m not in D} theta_m/m t^m), grown on demand.

    D is fixed, so a table built for one degree serves every larger one.
    """

    def __init__(self, model: WeightModel, excluded: frozenset, kind: str, scale, precision):
        self.model = model
        self.excluded = excluded
        self.kind = kind
        self.scale = scale
        self.precision = precision
        self.coeffs = None
        self.lock = threading.Lock()

    def _weights(self, N: int):
        A = RestrictionSet(N, frozenset(m for m in self.excluded if m <= N))
        g = allowed_series(self.model, A, N, self.kind, self.scale, self.precision)
        if g.kind in ("float", "complex"):
            return g.coeffs * np.arange(N + 1)
        with _prec(g.precision):
            return [c * k for k, c in enumerate(g.coeffs)]

    def series(self, N: int) -> Series:
        with self.lock:
            have = -1 if self.coeffs is None else len(self.coeffs) - 1
            if N > have:
                # grow geometrically so ladders reuse the table
                target = max(N, 2 * have) if have > 0 and self.kind == "rational" else N
                kg = self._weights(target)
                if self.kind in ("float", "complex"):
                    prefix = np.ones(1, dtype=kg.dtype) if self.coeffs is None else self.coeffs
                    self.coeffs = _exp_array(kg, prefix, target)
                    self.coeffs.flags.writeable = False
                else:
                    one = gmpy2.mpq(1) if self.kind == "rational" else gmpy2.mpfr(1)
                    prefix = [one] if self.coeffs is None else list(self.coeffs)
                    self.coeffs = tuple(_exp_scalar(kg, prefix, target, self.precision))
            return Series(self.coeffs[: N + 1], self.kind, self.scale, self.precision)


_TABLES: dict = {}
_TABLES_LOCK = threading.Lock()


def h_table(model: WeightModel, A, n: int | None = None, kind: str = "rational",
            scale=None, precision: int | None = None) -> Series:
    """Series whose coefficients are h_0(A), ..., h_n(A) (rescaled for float kinds)."""
    A = resolve_restriction(A, n)
    scale = _default_scale(model, kind, scale)
    if kind == "mpfloat":
        precision = precision or DEFAULT_MP_PRECISION
    key = (model, A.excluded, kind, scale, precision)
    with _TABLES_LOCK:
        table = _TABLES.get(key)
        if table is None:
            table = _TABLES[key] = _ExpTable(model, A.excluded, kind, scale, precision)
    return table.series(A.n)


def clear_tables() -> None:
    with _TABLES_LOCK:
        _TABLES.clear()


def h_n(model: WeightModel, A=None, n: int | None = None, kind: str = "rational",
        precision: int | None = None):
    """h_n(A) = [t^n] exp(g - L_D).  Zero is a legitimate answer."""
    A = resolve_restriction(A, n)
    return coefficient(h_table(model, A, kind=kind, precision=precision), A.n)


def _normalizer(model: WeightModel, A: RestrictionSet, kind: str, precision=None):
    """Scaled h_n, raising on a degenerate measure."""
    h = h_table(model, A, kind=kind, precision=precision)
    val = h.coeffs[A.n]
    if val == 0:
        raise DegenerateMeasureError(f"h_{A.n} = 0 for restriction {A.digest}")
    return h, val


# laws -----------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactLaw:
    support: tuple
    probs: tuple
    kind: str = "rational"

    def __post_init__(self):
        if len(self.support) != len(self.probs):
            raise ValueError("support and probabilities differ in length")
        if any(p < 0 for p in self.probs) and self.kind == "rational":
            raise ValueError("negative probability")

    def total(self):
        return sum(self.probs, Fraction(0) if self.kind == "rational" else 0.0)

    def prob(self, outcome):
        for x, p in zip(self.support, self.probs):
            if x == outcome:
                return p
        return Fraction(0) if self.kind == "rational" else 0.0

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probs))

    def expectation(self, f: Callable | None = None):
        f = f or (lambda x: x)
        return sum((f(x) * p for x, p in zip(self.support, self.probs)),
                   Fraction(0) if self.kind == "rational" else 0.0)

    def to_float(self) -> "ExactLaw":
        return ExactLaw(self.support, tuple(float(p) for p in self.probs), "float")

    def drop_zeros(self) -> "ExactLaw":
        keep = [(x, p) for x, p in zip(self.support, self.probs) if p != 0]
        return ExactLaw(tuple(x for x, _ in keep), tuple(p for _, p in keep), self.kind)


def _law_from_scaled(support, scaled_vals, norm, kind: str) -> ExactLaw:
    if kind == "rational":
        q = [Fraction(int(v.numerator), int(v.denominator)) for v in scaled_vals]
        nf = Fraction(int(norm.numerator), int(norm.denominator))
        return ExactLaw(tuple(support), tuple(v / nf for v in q), "rational")
    if kind == "mpfloat":
        return ExactLaw(tuple(support), tuple(v / norm for v in scaled_vals), "mpfloat")
    return ExactLaw(tuple(support), tuple(float(np.real(v / norm)) for v in scaled_vals), "float")


def _dot_top(a: Series, b: Series, n: int):
    """[t^n] (a * b) in stored (scaled) units."""
    if a.kind in ("float", "complex"):
        return np.dot(a.coeffs[: n + 1], b.coeffs[n::-1])
    with _prec(a.precision):
        s = a.coeffs[0] * 0
        for j in range(n + 1):
            if a.coeffs[j] != 0 and b.coeffs[n - j] != 0:
                s += a.coeffs[j] * b.coeffs[n - j]
        return s


def block_count_law(model: WeightModel, A, block: Iterable[int], n: int | None = None,
                    kind: str = "rational", precision: int | None = None) -> ExactLaw:
    """Exact law of sum_{m in block} C_m.

    P[B = k] h_n = [t^n] exp(g - L_D - L_B) L_B^k / k!, with B = block within A_n.
    """
    A = resolve_restriction(A, n)
    n = A.n
    _, hn = _normalizer(model, A, kind, precision)
    B = sorted(m for m in set(block) if m in A)
    base = allowed_series(model, A, n, kind, precision=precision)
    LB = L_D_series(model, B, n, kind, scale=base.scale, precision=precision)
    R = series_exp(base - LB)
    power = Series.one(n, kind, base.scale, base.precision)
    vals, k = [], 0
    mmin = B[0] if B else n + 1
    while True:
        vals.append(_dot_top(power, R, n))
        k += 1
        if k * mmin > n:
            break
        power = series_scale(power * LB, Fraction(1, k) if kind == "rational" else 1.0 / k)
    return _law_from_scaled(range(len(vals)), vals, hn, kind)


def total_cycles_law(model: WeightModel, A=None, n: int | None = None, kind: str = "rational",
                     precision: int | None = None) -> ExactLaw:
    """Law of T = sum_m C_m."""
    A = resolve_restriction(A, n)
    return block_count_law(model, A, range(1, A.n + 1), kind=kind, precision=precision)


def B_law(model: WeightModel, A, x: float, n: int | None = None, kind: str = "rational") -> ExactLaw:
    """Law of B_n(x) = number of cycles of length <= floor(n^x)."""
    A = resolve_restriction(A, n)
    return block_count_law(model, A, range(1, floor_pow(A.n, x) + 1), kind=kind)


def _count_vectors(M: Sequence[int], budget: int) -> Iterator[tuple]:
    if not M:
        yield ()
        return
    m, rest = M[0], M[1:]
    for c in range(budget // m + 1):
        for tail in _count_vectors(rest, budget - c * m):
            yield (c,) + tail


def joint_cycle_count_law(model: WeightModel, A, M: Iterable[int], n: int | None = None,
                          kind: str = "rational", precision: int | None = None) -> ExactLaw:
    """Joint law of (C_m)_{m in M}, outcomes ordered by increasing m.

    The exponent splits into the marked part (a polynomial in the markers,
    expanded by hand) and the unmarked remainder R = exp(g - L_D - L_M).
    """
    A = resolve_restriction(A, n)
    n = A.n
    M = sorted(set(M))
    if any(m not in A for m in M):
        raise ValueError(f"M = {M} is not contained in A_n")
    _, hn = _normalizer(model, A, kind, precision)
    base = allowed_series(model, A, n, kind, precision=precision)
    R = series_exp(base - L_D_series(model, M, n, kind, scale=base.scale, precision=precision))
    # per-length weight theta_m r^m / m in stored units
    if kind == "rational":
        w = {m: gmpy2.mpq(Fraction(model.theta(m))) / m for m in M}
        fact = lambda c: gmpy2.mpq(math.factorial(c))  # noqa: E731
    elif kind == "mpfloat":
        with _prec(base.precision):
            w = {m: base.coeffs[m] for m in M}
        fact = lambda c: gmpy2.mpfr(math.factorial(c))  # noqa: E731
    else:
        w = {m: base.coeffs[m].item() for m in M}
        fact = math.factorial
    support, vals = [], []
    with _prec(base.precision):
        for counts in _count_vectors(M, n):
            used = sum(m * c for m, c in zip(M, counts))
            weight = R.coeffs[n - used]
            for m, c in zip(M, counts):
                if c:
                    weight = weight * w[m] ** c / fact(c)
            support.append(counts)
            vals.append(weight)
    return _law_from_scaled(support, vals, hn, kind)


def ell1_law(model: WeightModel, A, n: int | None = None, kind: str = "rational",
             precision: int | None = None) -> ExactLaw:
    """Law of the length of the cycle containing 1:
    P[l1 = k] = theta_k / n * h_{n-k}(A_n) / h_n(A_n) for k in A_n."""
    A = resolve_restriction(A, n)
    n = A.n
    h, hn = _normalizer(model, A, kind, precision)
    base = allowed_series(model, A, n, kind, precision=precision)
    support = list(range(1, n + 1))
    with _prec(base.precision):
        # k * (theta_k r^k / k) = theta_k r^k
        vals = [base.coeffs[k] * k * h.coeffs[n - k] for k in support]
        vals = [v / n for v in vals]
    return _law_from_scaled(support, vals, hn, kind)


def ell1_falling_factorial_moment(model: WeightModel, A, b: int, n: int | None = None,
                                  kind: str = "rational"):
    """E[(l1 - 1)_b] with (x)_b the falling factorial."""
    if b < 1:
        raise ValueError("b >= 1")
    law = ell1_law(model, A, n, kind)
    one = Fraction(0) if kind == "rational" else 0.0
    total = one
    for k, p in zip(law.support, law.probs):
        if k - 1 >= b:
            total += math.perm(k - 1, b) * p
    return total


# characteristic functions -----------------------------------------------------------


def _complex_base(model: WeightModel, A: RestrictionSet) -> Series:
    return allowed_series(model, A, A.n, "complex")


def char_T(model: WeightModel, A, s: float, n: int | None = None) -> complex:
    """E[exp(i s T)] = [t^n] exp(e^{is}(g - L_D)) / h_n."""
    A = resolve_restriction(A, n)
    _, hn = _normalizer(model, A, "float")
    base = _complex_base(model, A)
    F = series_exp(series_scale(base, cmath.exp(1j * s)))
    return complex(F.coeffs[A.n] / hn)


def _block_indices(block) -> frozenset:
    if isinstance(block, RestrictionSet):
        return block.excluded
    return frozenset(int(m) for m in block)


def char_B(model: WeightModel, n: int, blocks: Sequence[tuple], restriction=None) -> complex:
    """Joint characteristic function of block counts.

    ``blocks`` holds ``(indices, s_j)`` pairs with disjoint index sets (a
    RestrictionSet contributes its excluded lengths).  Returns
    E[exp(i sum_j s_j sum_{m in block j} C_m)].
    """
    A = resolve_restriction(restriction, n)
    seen: set = set()
    for idx, _ in blocks:
        idx = _block_indices(idx)
        if seen & idx:
            raise ValueError("blocks overlap")
        seen |= idx
    _, hn = _normalizer(model, A, "float")
    expo = _complex_base(model, A)
    for idx, s in blocks:
        idx = [m for m in _block_indices(idx) if m in A]
        if idx:
            LB = L_D_series(model, idx, A.n, "complex")
            expo = expo + series_scale(LB, cmath.exp(1j * s) - 1)
    F = series_exp(expo)
    return complex(F.coeffs[A.n] / hn)


def parity_blocks(n: int, x_even: float = 1.0, x_odd: float = 1.0):
    """Index sets {m <= n^x_even, m even} and {m <= n^x_odd, m odd}."""
    be, bo = floor_pow(n, x_even), floor_pow(n, x_odd)
    return range(2, be + 1, 2), range(1, bo + 1, 2)


def two_singularity_coefficient(model: WeightModel, n: int, w1: complex, w2: complex) -> complex:
    """[t^n] exp(w1 g(t) + w2 g(-t)) in stored units (scale r)."""
    g = allowed_series(model, RestrictionSet(n), n, "complex")
    signs = np.where(np.arange(n + 1) % 2 == 0, 1.0, -1.0)
    gm = g.like(g.coeffs * signs)
    F = series_exp(series_scale(g, w1) + series_scale(gm, w2))
    return complex(F.coeffs[n])


def char_parity_full(model: WeightModel, n: int, s_even: float, s_odd: float) -> complex:
    """E[exp(i s1 B^ev(1) + i s2 B^odd(1))] through the g(t), g(-t) split."""
    _, hn = _normalizer(model, RestrictionSet(n), "float")
    e1, e2 = cmath.exp(1j * s_even), cmath.exp(1j * s_odd)
    return two_singularity_coefficient(model, n, (e1 + e2) / 2, (e1 - e2) / 2) / hn


# brute force --------------------------------------------------------------------------


def partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Partitions of n in decreasing part order."""
    if n == 0:
        yield ()
        return

    def rec(remaining: int, largest: int, prefix: list):
        if remaining == 0:
            yield tuple(prefix)
            return
        for part in range(min(remaining, largest), 0, -1):
            prefix.append(part)
            yield from rec(remaining - part, part, prefix)
            prefix.pop()

    yield from rec(n, n, [])


@dataclass(frozen=True)
class CycleType:
    partition: tuple[int, ...]

    def __post_init__(self):
        p = tuple(sorted((int(x) for x in self.partition), reverse=True))
        if any(x < 1 for x in p):
            raise ValueError("parts must be positive")
        object.__setattr__(self, "partition", p)

    @classmethod
    def from_counts(cls, counts: dict[int, int]) -> "CycleType":
        return cls(tuple(m for m, c in counts.items() for _ in range(c)))

    @property
    def n(self) -> int:
        return sum(self.partition)

    @property
    def length(self) -> int:
        return len(self.partition)

    @property
    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for m in self.partition:
            out[m] = out.get(m, 0) + 1
        return out

    @property
    def z(self) -> int:
        return math.prod(m**c * math.factorial(c) for m, c in self.counts.items())

    def weight(self, model: WeightModel, A: RestrictionSet) -> Fraction:
        """prod theta_{lambda_i} 1{lambda_i in A} / z_lambda."""
        if any(m not in A for m in self.partition):
            return Fraction(0)
        w = Fraction(1)
        for m in self.partition:
            w *= Fraction(model.theta(m))
        return w / self.z


BRUTE_FORCE_MAX_N = 12

STATISTICS = ("cycle_type", "ordered", "T", "C", "B", "ell1")


def brute_force_oracle(model: WeightModel, A, statistic: str, n: int | None = None,
                       M: Iterable[int] | None = None, x: float | None = None) -> ExactLaw:
    """Exact law of a cycle statistic by summing over all partitions of n."""
    A = resolve_restriction(A, n)
    n = A.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}")
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    types = [CycleType(p) for p in partitions(n)]
    weights = [ct.weight(model, A) for ct in types]
    h = sum(weights, Fraction(0))
    if h == 0:
        raise DegenerateMeasureError(f"h_{n} = 0 for restriction {A.digest}")
    acc: dict = {}

    def add(key, p):
        acc[key] = acc.get(key, Fraction(0)) + p

    if statistic == "C":
        if M is None:
            raise ValueError("statistic C needs the index set M")
        Ms = sorted(set(M))
    if statistic == "B":
        if x is None:
            raise ValueError("statistic B needs x")
        bx = floor_pow(n, x)
    for ct, w in zip(types, weights):
        if w == 0:
            continue
        p = w / h
        counts = ct.counts
        if statistic in ("cycle_type", "ordered"):
            add(ct.partition, p)
        elif statistic == "T":
            add(ct.length, p)
        elif statistic == "C":
            add(tuple(counts.get(m, 0) for m in Ms), p)
        elif statistic == "B":
            add(sum(c for m, c in counts.items() if m <= bx), p)
        else:  # element 1 sits in an m-cycle with probability m C_m / n
            for m, c in counts.items():
                add(m, p * m * c / n)
    keys = sorted(acc)
    return ExactLaw(tuple(keys), tuple(acc[k] for k in keys), "rational")


def brute_force_h(model: WeightModel, A, n: int | None = None) -> Fraction:
    A = resolve_restriction(A, n)
    return sum((CycleType(p).weight(model, A) for p in partitions(A.n)), Fraction(0))


# moments of block counts -------------------------------------------------------------


def _conv(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    if n > 4000:
        from scipy.signal import fftconvolve
        return fftconvolve(a, b)[: n + 1]
    return np.convolve(a, b)[: n + 1]


def block_count_moments(model: WeightModel, A, blocks: Sequence, n: int | None = None):
    """Exact means and covariance matrix of block counts (float kind).

    Factorial moments come from derivatives in the markers:
    E[X_i] h_n = [t^n] L_i F and E[X_i X_j - 1{i=j} X_i] h_n = [t^n] L_i L_j F,
    with F = exp(g - L_D) and L_i the block series restricted to A_n.
    """
    A = resolve_restriction(A, n)
    n = A.n
    h, hn = _normalizer(model, A, "float")
    F = np.asarray(h.coeffs)
    Ls = []
    for idx in blocks:
        idx = [m for m in _block_indices(idx) if m in A]
        Ls.append(np.asarray(L_D_series(model, idx, n, "float").coeffs))
    k = len(Ls)
    LF = [_conv(L, F, n) for L in Ls]
    mean = np.array([LF[i][n] for i in range(k)]) / hn
    cov = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            second = np.dot(Ls[i][: n + 1], LF[j][n::-1]) / hn
            if i == j:
                second += mean[i]
            cov[i, j] = cov[j, i] = second - mean[i] * mean[j]
    return mean, cov
