"""Forcing families g(t, z) for the lattice equation.

Each family packages the map itself together with the metadata that the
certificate and solver consume:

* ``period``             -- periodicity in t,
* ``evaluate``           -- (t, z) -> g(t, z), vectorized over z,
* ``growth_exponent``    -- r when |g| scales like |z|^r, else None,
* ``derivative``         -- optional realified 2x2 Jacobian block of
  z = x + i*y -> g(t, z), rows (Re g, Im g), columns (d/dx, d/dy),
* ``threshold_formula``  -- optional closed form mapping the certificate's
  cubic-threshold coefficient to a radius beyond which |g(t, z)| <= coef*|z|^3,
* ``sup_formula``        -- optional closed form for sup |g| over a disk.

Families without the closed forms are handled by the certificate module's
numeric scans, at the price of a "sampled" rigor tag on the result.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCoefficients, InvalidExponent

__all__ = [
    "Potential",
    "power_law",
    "bounded_potential",
    "zero_potential",
    "constant_potential",
    "growth_check",
    "GrowthReport",
]

#: number of phase samples per circle in the growth scan
GROWTH_PHASES = 64


@dataclass(frozen=True)
class Potential:
    """One forcing family; see the module docstring for field semantics."""

    period: int
    evaluate: Callable[[int, np.ndarray], np.ndarray]
    kind: str = "custom"
    growth_exponent: float | None = None
    derivative: Callable[[int, complex], np.ndarray] | None = None
    threshold_formula: Callable[[float], float] | None = None
    sup_formula: Callable[[float], float] | None = None
    coefficients: tuple[complex, ...] = field(default=())


def _coeff_tuple(f) -> tuple[complex, ...]:
    coeffs = tuple(complex(c) for c in np.atleast_1d(np.asarray(f, dtype=complex)))
    if len(coeffs) == 0:
        raise EmptyCoefficients("coefficient list must contain at least one entry")
    return coeffs


def _rotation(c: complex) -> np.ndarray:
    # multiplication by the complex scalar c, as a real 2x2 block
    return np.array([[c.real, -c.imag], [c.imag, c.real]])


def _make_power_law(coeffs: tuple[complex, ...], r: float) -> Potential:
    period = len(coeffs)
    fmax = max(abs(c) for c in coeffs)
    r = float(r)

    def evaluate(t: int, z):
        zz = np.asarray(z, dtype=complex)
        az = np.abs(zz)
        mag = np.zeros_like(az)
        nz = az > 0.0
        mag[nz] = az[nz] ** (r - 1.0)
        return coeffs[t % period] * mag * zz

    def derivative(t: int, z: complex) -> np.ndarray:
        z = complex(z)
        x, y = z.real, z.imag
        rho2 = x * x + y * y
        if rho2 == 0.0:
            # the derivative of |z|^(r-1) z at 0 is the identity for r = 1,
            # zero for r > 1, and does not exist for r < 1; return the
            # continuous extension where there is one and zero otherwise
            inner = np.eye(2) if r == 1.0 else np.zeros((2, 2))
        else:
            rho = np.sqrt(rho2)
            scale = rho ** (r - 1.0)
            quad = (r - 1.0) * rho ** (r - 3.0)
            inner = scale * np.eye(2) + quad * np.array([[x * x, x * y], [x * y, y * y]])
        return _rotation(coeffs[t % period]) @ inner

    def threshold_formula(coef: float) -> float:
        if fmax == 0.0:
            return 1.0
        return float((fmax / coef) ** (1.0 / (3.0 - r)))

    def sup_formula(radius: float) -> float:
        return float(fmax * radius**r)

    return Potential(
        period=period,
        evaluate=evaluate,
        kind="power_law",
        growth_exponent=r,
        derivative=derivative,
        threshold_formula=threshold_formula if r < 3.0 else None,
        sup_formula=sup_formula,
        coefficients=coeffs,
    )


def power_law(f, r: float) -> Potential:
    """Family g(t, z) = f(t) * |z|^(r-1) * z with subcubic exponent 0 < r < 3.

    The modulus is |f(t)| * |z|^r and the map is odd and continuous in z,
    including at z = 0.  Exponents outside (0, 3) are rejected with
    InvalidExponent; for r >= 3 the certificate's growth hypothesis fails for
    any nonzero f, and r <= 0 would make the map discontinuous at the origin.
    """
    coeffs = _coeff_tuple(f)
    if not 0.0 < float(r) < 3.0:
        raise InvalidExponent(f"growth exponent must lie strictly between 0 and 3, got {r}")
    return _make_power_law(coeffs, float(r))


def _power_law_unchecked(f, r: float) -> Potential:
    """Power-law family without the exponent guard and without closed-form
    certificate bounds, so the numeric scan sees the raw growth.

    Exists so negative tests (and deliberately out-of-range configs) exercise
    the certificate's rejection path instead of the constructor's.
    """
    pot = _make_power_law(_coeff_tuple(f), float(r))
    return Potential(
        period=pot.period,
        evaluate=pot.evaluate,
        kind="power_law",
        growth_exponent=pot.growth_exponent,
        derivative=pot.derivative,
        threshold_formula=None,
        sup_formula=None,
        coefficients=pot.coefficients,
    )


def bounded_potential(f) -> Potential:
    """Family g(t, z) = f(t) * z / (1 + |z|^2), globally bounded by max|f| / 2.

    The bound is attained at |z| = 1.
    """
    coeffs = _coeff_tuple(f)
    period = len(coeffs)
    fmax = max(abs(c) for c in coeffs)

    def evaluate(t: int, z):
        zz = np.asarray(z, dtype=complex)
        return coeffs[t % period] * zz / (1.0 + np.abs(zz) ** 2)

    def derivative(t: int, z: complex) -> np.ndarray:
        z = complex(z)
        x, y = z.real, z.imag
        denom = (1.0 + x * x + y * y) ** 2
        inner = (
            np.array(
                [
                    [1.0 + y * y - x * x, -2.0 * x * y],
                    [-2.0 * x * y, 1.0 + x * x - y * y],
                ]
            )
            / denom
        )
        return _rotation(coeffs[t % period]) @ inner

    def threshold_formula(coef: float) -> float:
        # beyond rho the inequality fmax*rho/(1+rho^2) <= coef*rho^3 holds,
        # i.e. coef*rho^2*(1+rho^2) >= fmax; solve the quadratic in rho^2
        if fmax == 0.0:
            return 1.0
        x = (-1.0 + np.sqrt(1.0 + 4.0 * fmax / coef)) / 2.0
        return float(np.sqrt(x))

    def sup_formula(radius: float) -> float:
        if radius >= 1.0:
            return float(fmax / 2.0)
        return float(fmax * radius / (1.0 + radius * radius))

    return Potential(
        period=period,
        evaluate=evaluate,
        kind="bounded",
        growth_exponent=None,
        derivative=derivative,
        threshold_formula=threshold_formula,
        sup_formula=sup_formula,
        coefficients=coeffs,
    )


def zero_potential(period: int = 1) -> Potential:
    """The unforced equation: g identically zero."""
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")

    def evaluate(t: int, z):
        return np.zeros_like(np.asarray(z, dtype=complex))

    def derivative(t: int, z: complex) -> np.ndarray:
        return np.zeros((2, 2))

    return Potential(
        period=period,
        evaluate=evaluate,
        kind="zero",
        growth_exponent=None,
        derivative=derivative,
        threshold_formula=lambda coef: 1.0,
        sup_formula=lambda radius: 0.0,
        coefficients=(),
    )


def constant_potential(f) -> Potential:
    """z-independent forcing g(t, z) = f(t).

    Not odd in z (unless f = 0), so it breaks the symmetry that pins the
    trivial solution at the origin; the steady-state pipeline relies on it.
    """
    coeffs = _coeff_tuple(f)
    period = len(coeffs)
    fmax = max(abs(c) for c in coeffs)

    def evaluate(t: int, z):
        zz = np.asarray(z, dtype=complex)
        return np.full_like(zz, coeffs[t % period])

    def derivative(t: int, z: complex) -> np.ndarray:
        return np.zeros((2, 2))

    def threshold_formula(coef: float) -> float:
        if fmax == 0.0:
            return 1.0
        return float((fmax / coef) ** (1.0 / 3.0))

    return Potential(
        period=period,
        evaluate=evaluate,
        kind="constant",
        growth_exponent=0.0,
        derivative=derivative,
        threshold_formula=threshold_formula,
        sup_formula=lambda radius: float(fmax),
        coefficients=coeffs,
    )


@dataclass(frozen=True)
class GrowthReport:
    """Sampled growth ratios max_t max_{|z|=rho} |g(t, z)| / rho^3 per radius."""

    radii: tuple[float, ...]
    ratios: tuple[float, ...]
    monotone_decay: bool


def growth_check(g: Potential, radii) -> GrowthReport:
    """Sample the cubic growth ratio of g on circles of the given radii.

    ``radii`` must be positive and strictly increasing.  The monotone-decay
    flag is set when the ratios over the second half of the radii strictly
    decrease, the numerical signature of genuinely subcubic growth; a family
    with exactly cubic growth produces a constant tail and no flag.
    """
    rho = np.asarray(radii, dtype=float)
    if rho.ndim != 1 or rho.size == 0:
        raise ValueError("radii must be a nonempty 1-d sequence")
    if not np.all(rho > 0.0):
        raise ValueError("radii must be positive")
    if not np.all(np.diff(rho) > 0.0):
        raise ValueError("radii must be strictly increasing")

    phases = np.exp(2j * np.pi * np.arange(GROWTH_PHASES) / GROWTH_PHASES)
    ratios = np.empty_like(rho)
    for i, radius in enumerate(rho):
        circle = radius * phases
        worst = 0.0
        for t in range(g.period):
            worst = max(worst, float(np.abs(g.evaluate(t, circle)).max()))
        ratios[i] = worst / radius**3

    tail = ratios[rho.size // 2 :]
    decay = bool(np.all(np.diff(tail) < 0.0)) if tail.size >= 2 else False
    return GrowthReport(tuple(rho), tuple(float(x) for x in ratios), decay)
