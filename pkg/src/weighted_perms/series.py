"""Dense truncated power series.

A :class:`Series` holds coefficients ``c_0..c_N`` of one scalar kind:

``rational``  exact GMP rationals (``gmpy2.mpq``), scale fixed at 1
``float``     float64 numpy array
``complex``   complex128 numpy array
``mpfloat``   ``gmpy2.mpfr`` at a fixed binary precision

Stored coefficients are rescaled: the value kept at index ``n`` is the true
coefficient times ``scale**n``.  Products, exponentials and logarithms are
invariant under this rescaling, so a scale equal to the radius of
convergence keeps large-``n`` coefficients within float range.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

KINDS = ("rational", "float", "complex", "mpfloat")
_ARRAY_KINDS = {"float": np.float64, "complex": np.complex128}

DEFAULT_MP_PRECISION = 2000


class ScaleMismatchError(ValueError):
    pass


def _prec(bits: int | None):
    """Context manager fixing the MPFR working precision."""
    return gmpy2.context(gmpy2.get_context(), precision=bits or 53)


def _to_mpq(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, float):
        return mpq(Fraction(x))
    return mpq(x)


def _convert(x, kind: str, precision: int | None):
    if kind == "rational":
        return _to_mpq(x)
    if kind == "mpfloat":
        with _prec(precision):
            if isinstance(x, Fraction):
                return mpfr(mpq(x.numerator, x.denominator))
            return mpfr(x)
    if kind == "float":
        return float(x)
    return complex(x)


@dataclass(frozen=True, eq=False)
class Series:
    coeffs: Any
    kind: str = "float"
    scale: float = 1.0
    precision: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scalar kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "rational" and self.scale != 1:
            raise ValueError("rational series carry scale 1")
        if self.kind == "mpfloat" and self.precision is None:
            object.__setattr__(self, "precision", DEFAULT_MP_PRECISION)
        if self.kind in _ARRAY_KINDS:
            arr = np.array(self.coeffs, dtype=_ARRAY_KINDS[self.kind])
            arr.flags.writeable = False
            object.__setattr__(self, "coeffs", arr)
        else:
            object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if len(self.coeffs) == 0:
            raise ValueError("a series needs at least the constant coefficient")

    # construction -------------------------------------------------------

    @classmethod
    def from_coeffs(cls, values: Iterable, kind: str = "float", scale: float = 1.0,
                    precision: int | None = None) -> "Series":
        """Build from *true* coefficients, applying the rescaling."""
        if kind == "mpfloat" and precision is None:
            precision = DEFAULT_MP_PRECISION
        vals = [_convert(v, kind, precision) for v in values]
        if scale != 1:
            if kind in _ARRAY_KINDS:
                arr = np.array(vals, dtype=_ARRAY_KINDS[kind])
                vals = arr * scale ** np.arange(len(arr), dtype=float)
            elif kind == "mpfloat":
                with _prec(precision):
                    s = mpfr(scale)
                    vals = [v * s**i for i, v in enumerate(vals)]
        return cls(vals, kind, scale, precision)

    @classmethod
    def zeros(cls, order: int, kind: str = "float", scale: float = 1.0,
              precision: int | None = None) -> "Series":
        return cls.from_coeffs([0] * (order + 1), kind, scale, precision)

    @classmethod
    def one(cls, order: int, kind: str = "float", scale: float = 1.0,
            precision: int | None = None) -> "Series":
        return cls.from_coeffs([1] + [0] * order, kind, scale, precision)

    def like(self, values) -> "Series":
        """A series of the same kind/scale/precision from already-scaled values."""
        return Series(values, self.kind, self.scale, self.precision)

    # basic properties ---------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def truncate(self, order: int) -> "Series":
        if order > self.order:
            raise ValueError(f"cannot extend order {self.order} series to {order}")
        return self.like(self.coeffs[: order + 1])

    def to_kind(self, kind: str, scale: float | None = None,
                precision: int | None = None) -> "Series":
        """Convert the scalar kind (and optionally the scale)."""
        scale = self.scale if scale is None else scale
        true = [coefficient(self, n) for n in range(self.order + 1)]
        if kind == "rational":
            if self.kind not in ("rational",):
                raise ValueError("only rational series convert to rational kind")
            return Series(true, "rational")
        if kind in _ARRAY_KINDS and self.kind in ("rational", "mpfloat") and scale != 1:
            # rescale in the exact/mp domain before dropping to float
            prec = precision or self.precision or DEFAULT_MP_PRECISION
            with _prec(prec):
                s = mpfr(scale)
                vals = [mpfr(c) * s**i for i, c in enumerate(true)]
            return Series([_convert(v, kind, None) for v in vals], kind, scale)
        return Series.from_coeffs(true, kind, scale, precision)

    # arithmetic sugar -----------------------------------------------------

    def __add__(self, other):
        return series_add(self, other)

    def __sub__(self, other):
        return series_add(self, series_scale(other, -1))

    def __neg__(self):
        return series_scale(self, -1)

    def __mul__(self, other):
        if isinstance(other, Series):
            return series_mul(self, other)
        return series_scale(self, other)

    def __rmul__(self, other):
        return series_scale(self, other)

    def __repr__(self):
        head = ", ".join(str(c) for c in list(self.coeffs[:6]))
        more = ", ..." if self.order > 5 else ""
        return f"Series([{head}{more}], kind={self.kind!r}, order={self.order}, scale={self.scale})"


def _check_compatible(a: Series, b: Series) -> int:
    if a.kind != b.kind:
        raise TypeError(f"scalar kind mismatch: {a.kind} vs {b.kind}")
    if a.scale != b.scale:
        raise ScaleMismatchError(f"scale mismatch: {a.scale} vs {b.scale}")
    return min(a.order, b.order)


def series_add(a: Series, b: Series) -> Series:
    order = _check_compatible(a, b)
    if a.kind in _ARRAY_KINDS:
        return a.like(a.coeffs[: order + 1] + b.coeffs[: order + 1])
    with _prec(a.precision):
        return a.like([x + y for x, y in zip(a.coeffs[: order + 1], b.coeffs[: order + 1])])


def series_scale(a: Series, c) -> Series:
    """Multiply every coefficient by the scalar ``c``."""
    if a.kind in _ARRAY_KINDS:
        if a.kind == "float" and isinstance(c, complex):
            raise TypeError("complex scalar on a float series; convert to complex first")
        return a.like(a.coeffs * c)
    c = _convert(c, a.kind, a.precision)
    with _prec(a.precision):
        return a.like([x * c for x in a.coeffs])


def series_mul(a: Series, b: Series) -> Series:
    order = _check_compatible(a, b)
    if a.kind in _ARRAY_KINDS:
        return a.like(np.convolve(a.coeffs[: order + 1], b.coeffs[: order + 1])[: order + 1])
    x, y = a.coeffs, b.coeffs
    xs = [(i, v) for i, v in enumerate(x[: order + 1]) if v != 0]
    zero = _convert(0, a.kind, a.precision)
    out = [zero] * (order + 1)
    with _prec(a.precision):
        for i, v in xs:
            for j in range(order + 1 - i):
                if y[j] != 0:
                    out[i + j] = out[i + j] + v * y[j]
    return a.like(out)


def series_derivative(a: Series) -> Series:
    """Termwise derivative; the result has order ``a.order - 1``."""
    if a.order == 0:
        return a.like([a.coeffs[0] * 0])
    if a.kind in _ARRAY_KINDS:
        n = np.arange(1, a.order + 1)
        return a.like(a.coeffs[1:] * n / a.scale)
    with _prec(a.precision):
        s = _convert(a.scale, a.kind, a.precision)
        return a.like([a.coeffs[n] * n / s for n in range(1, a.order + 1)])


# exponential / logarithm ------------------------------------------------------


def _exp_array(kg: np.ndarray, prefix: np.ndarray, order: int) -> np.ndarray:
    """Run n F_n = sum_k kg_k F_{n-k} from len(prefix) up to ``order``.

    F is kept reversed in a buffer so every dot product reads contiguous memory.
    """
    start = len(prefix)
    rev = np.zeros(order + 1, dtype=kg.dtype)
    rev[order - start + 1:] = prefix[::-1]
    for n in range(start, order + 1):
        rev[order - n] = np.dot(kg[1 : n + 1], rev[order - n + 1 : order + 1]) / n
    return rev[::-1].copy()


def _exp_scalar(kg: Sequence, prefix: list, order: int, precision: int | None) -> list:
    out = list(prefix)
    nz = [k for k in range(1, len(kg)) if kg[k] != 0]
    with _prec(precision):
        for n in range(len(out), order + 1):
            s = out[0] * 0
            for k in nz:
                if k > n:
                    break
                s += kg[k] * out[n - k]
            out.append(s / n)
    return out


def _weighted_index(g: Series):
    """k * g_k as the recurrence weights (kind-native container)."""
    if g.kind in _ARRAY_KINDS:
        return g.coeffs * np.arange(g.order + 1)
    with _prec(g.precision):
        return [c * k for k, c in enumerate(g.coeffs)]


def series_exp(g: Series) -> Series:
    """exp(g) for a series with zero constant term, via F' = g'F."""
    if g.coeffs[0] != 0:
        raise ValueError("series_exp needs a zero constant term")
    kg = _weighted_index(g)
    one = _convert(1, g.kind, g.precision)
    if g.kind in _ARRAY_KINDS:
        coeffs = _exp_array(kg, np.array([one], dtype=kg.dtype), g.order)
    else:
        coeffs = _exp_scalar(kg, [one], g.order, g.precision)
    return g.like(coeffs)


def series_log(f: Series) -> Series:
    """Inverse of :func:`series_exp`; needs ``f_0 == 1``."""
    if f.coeffs[0] != 1:
        raise ValueError("series_log needs constant term 1")
    N = f.order
    if f.kind in _ARRAY_KINDS:
        fc = f.coeffs
        kg = np.zeros(N + 1, dtype=fc.dtype)
        for n in range(1, N + 1):
            # n g_n = n f_n - sum_{k<n} k g_k f_{n-k}
            kg[n] = n * fc[n] - np.dot(kg[1:n], fc[n - 1 : 0 : -1])
        out = np.zeros(N + 1, dtype=fc.dtype)
        out[1:] = kg[1:] / np.arange(1, N + 1)
        return f.like(out)
    fc = f.coeffs
    zero = fc[0] * 0
    kg = [zero] * (N + 1)
    with _prec(f.precision):
        for n in range(1, N + 1):
            s = fc[n] * n
            for k in range(1, n):
                if kg[k] != 0 and fc[n - k] != 0:
                    s -= kg[k] * fc[n - k]
            kg[n] = s
        return f.like([zero] + [kg[n] / n for n in range(1, N + 1)])


def coefficient(f: Series, n: int, scaled: bool = False):
    """``[t^n] f``.

    Returns the true coefficient by default (``Fraction`` for rational
    series) or the stored, rescaled value when ``scaled`` is true.
    """
    if n < 0 or n > f.order:
        raise IndexError(f"index {n} outside truncation order {f.order}")
    c = f.coeffs[n]
    if f.kind == "rational":
        return Fraction(int(c.numerator), int(c.denominator))
    if f.kind in _ARRAY_KINDS:
        c = c.item()
        if scaled or f.scale == 1:
            return c
        return c / f.scale**n
    if scaled or f.scale == 1:
        return c
    with _prec(f.precision):
        return c / mpfr(f.scale) ** n
