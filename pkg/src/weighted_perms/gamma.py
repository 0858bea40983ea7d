"""Complex Gamma function.

Lanczos approximation with g = 7 and nine coefficients, reflected into the
right half plane.  A Stirling series with argument shifting is kept alongside
as an independent check.
"""
from __future__ import annotations

import cmath
import math

_G = 7
_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


class GammaPoleError(ValueError):
    """Argument is a nonpositive integer."""


def _is_pole(z: complex, tol: float = 1e-14) -> bool:
    return z.real <= 0.5 and abs(z.imag) <= tol and abs(z.real - round(z.real)) <= tol and round(z.real) <= 0


def _lanczos_log(z: complex) -> complex:
    """log Gamma(z) for Re z >= 0.5 (principal branch of the Lanczos form)."""
    z -= 1
    x = _P[0]
    for i in range(1, len(_P)):
        x += _P[i] / (z + i)
    t = z + _G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


def complex_gamma(z) -> complex:
    """Gamma(z) for complex z, raising :class:`GammaPoleError` at poles."""
    z = complex(z)
    if _is_pole(z):
        raise GammaPoleError(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        # Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return math.pi / (cmath.sin(math.pi * z) * complex_gamma(1 - z))
    return cmath.exp(_lanczos_log(z))


def reciprocal_gamma(z) -> complex:
    """1/Gamma(z), equal to 0 at the poles."""
    z = complex(z)
    if _is_pole(z):
        return 0j
    if z.real < 0.5:
        return cmath.sin(math.pi * z) * complex_gamma(1 - z) / math.pi
    return cmath.exp(-_lanczos_log(z))


# independent route: Stirling series after shifting the argument

_BERNOULLI = (
    (2, 1 / 6), (4, -1 / 30), (6, 1 / 42), (8, -1 / 30), (10, 5 / 66),
    (12, -691 / 2730), (14, 7 / 6), (16, -3617 / 510),
)


def stirling_log_gamma(z, shift: int = 20) -> complex:
    """log Gamma(z) from the asymptotic series at z + shift, then the recurrence."""
    z = complex(z)
    if z.real < 0.5:
        raise ValueError("use the reflection formula for Re z < 0.5")
    w = z + shift
    s = (w - 0.5) * cmath.log(w) - w + _LOG_SQRT_2PI
    for k, b in _BERNOULLI:
        s += b / (k * (k - 1) * w ** (k - 1))
    for j in range(shift):
        s -= cmath.log(z + j)
    return s


def stirling_gamma(z, shift: int = 20) -> complex:
    z = complex(z)
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * stirling_gamma(1 - z, shift))
    return cmath.exp(stirling_log_gamma(z, shift))
