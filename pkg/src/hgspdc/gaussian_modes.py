"""Hermite-Gaussian beams: field amplitudes, angular spectra, beam geometry and
the diagonal (45 degree rotated) HG expansion coefficients.

All lengths are SI metres, wavevectors are 1/m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

# exact integer factorials up to here, log-gamma above
_EXACT_FACTORIAL_MAX = 20


@dataclass(frozen=True, order=True)
class ModeIndex:
    """HG mode label (n, m): n is the x index, m the y index."""

    n: int
    m: int

    def __post_init__(self):
        if int(self.n) != self.n or int(self.m) != self.m:
            raise ValueError(f"mode indices must be integers, got ({self.n}, {self.m})")
        if self.n < 0 or self.m < 0:
            raise ValueError(f"mode indices must be nonnegative, got ({self.n}, {self.m})")

    @property
    def order(self) -> int:
        return self.n + self.m

    def __iter__(self):
        yield self.n
        yield self.m

    def __str__(self):
        return f"HG{self.n}{self.m}"


def as_mode(mode) -> ModeIndex:
    if isinstance(mode, ModeIndex):
        return mode
    n, m = mode
    return ModeIndex(n, m)


@dataclass(frozen=True)
class BeamGeometry:
    wavelength: float
    waist: float

    def __post_init__(self):
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not (self.waist > 0 and math.isfinite(self.waist)):
            raise ValueError(f"waist must be positive, got {self.waist}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def rayleigh_range(self) -> float:
        return 0.5 * self.wavenumber * self.waist**2


def beam_width(geom: BeamGeometry, z):
    return geom.waist * np.sqrt(1.0 + (np.asarray(z, dtype=float) / geom.rayleigh_range) ** 2)


def radius_of_curvature(geom: BeamGeometry, z):
    """Wavefront radius R(z) = z (1 + z_R^2 / z^2).

    This is the standard Gaussian-beam expression. Raises ``ValueError`` at
    z = 0, where the wavefront is plane.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z == 0):
        raise ValueError("radius of curvature is infinite at z = 0")
    zr = geom.rayleigh_range
    out = z * (1.0 + zr**2 / z**2)
    return float(out) if out.ndim == 0 else out


def gouy_phase(geom: BeamGeometry, z):
    return np.arctan(np.asarray(z, dtype=float) / geom.rayleigh_range)


# ---------------------------------------------------------------------------
# special functions

def hermite_poly(n: int, x):
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence.

    Works on scalars and arrays. Raises ``OverflowError`` if the result is not
    representable in double precision.
    """
    if n < 0:
        raise ValueError(f"Hermite order must be nonnegative, got {n}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        out = h_prev
    else:
        h = 2.0 * x
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(1, n):
                h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
        out = h
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"H_{n}(x) overflows double precision for the given x")
    return float(out) if out.ndim == 0 else out


def hermite_poly_explicit(n: int, x, exact: bool = False):
    """H_n(x) from the finite power sum over (-1)^j n!/(j!(n-2j)!) (2x)^(n-2j).

    Cross-check evaluator only: the alternating sum loses accuracy at large n.
    With ``exact=True`` a scalar ``x`` is converted to a ``Fraction`` and the
    sum is carried out in rational arithmetic, then rounded once.
    """
    if n < 0:
        raise ValueError(f"Hermite order must be nonnegative, got {n}")
    if exact:
        xf = Fraction(float(x))
        total = sum(
            Fraction((-1) ** j * math.factorial(n), math.factorial(j) * math.factorial(n - 2 * j))
            * (2 * xf) ** (n - 2 * j)
            for j in range(n // 2 + 1)
        )
        return float(total)
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for j in range(n // 2 + 1):
        c = (-1) ** j * math.factorial(n) / (math.factorial(j) * math.factorial(n - 2 * j))
        total = total + c * (2.0 * x) ** (n - 2 * j)
    return float(total) if total.ndim == 0 else total


def log_factorial(n: int) -> float:
    if n < 0:
        raise ValueError("factorial of a negative number")
    if n <= _EXACT_FACTORIAL_MAX:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1.0)


@lru_cache(maxsize=4096)
def _normalization(n: int, m: int) -> float:
    if n <= _EXACT_FACTORIAL_MAX and m <= _EXACT_FACTORIAL_MAX:
        denom = 2 ** (n + m) * math.factorial(n) * math.factorial(m)
        return math.sqrt(2.0 / (math.pi * denom))
    log_c = 0.5 * (math.log(2.0 / math.pi) - (n + m) * math.log(2.0) - log_factorial(n) - log_factorial(m))
    value = math.exp(log_c)
    if value == 0.0:
        raise OverflowError(f"normalization constant of order {n + m} HG mode underflows double precision")
    return value


def normalization_C(mode) -> float:
    """C_nm = sqrt(2 / (2^(n+m) pi n! m!))."""
    mode = as_mode(mode)
    return _normalization(*sorted((mode.n, mode.m)))  # sorted: bit-identical under n <-> m


def spectral_prefactor(mode) -> complex:
    """D_nm = (-i)^(n+m) C_nm / 2, the Fourier-transform prefactor of HG_nm."""
    mode = as_mode(mode)
    return (-1j) ** (mode.order % 4) * normalization_C(mode) / 2.0


def hg_field(mode, geom: BeamGeometry, x, y, z=0.0):
    """Complex field HG_nm(x, y, z), including Gouy and curvature phases.

    At z = 0 the curvature phase is taken in the R -> infinity limit.
    """
    mode = as_mode(mode)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = float(beam_width(geom, z))
    r2 = x**2 + y**2
    amp = (
        normalization_C(mode) / w
        * hermite_poly(mode.n, math.sqrt(2.0) * x / w)
        * hermite_poly(mode.m, math.sqrt(2.0) * y / w)
        * np.exp(-r2 / w**2)
    )
    phase = -(mode.order + 1) * float(gouy_phase(geom, z))
    if z != 0:
        phase = phase - geom.wavenumber * r2 / (2.0 * radius_of_curvature(geom, z))
    out = amp * np.exp(1j * phase)
    return complex(out) if np.ndim(out) == 0 else out


def angular_spectrum(mode, geom: BeamGeometry, qx, qy, z=0.0):
    """Normalized angular spectrum v_nm(qx, qy) of an HG mode.

    Uses the width w(z) and Gouy phase of the beam at ``z``; the integral of
    |v|^2 over the q-plane is one for every z.
    """
    mode = as_mode(mode)
    qx = np.asarray(qx, dtype=float)
    qy = np.asarray(qy, dtype=float)
    w = float(beam_width(geom, z))
    s = w / math.sqrt(2.0)
    out = (
        w * spectral_prefactor(mode)
        * hermite_poly(mode.n, s * qx)
        * hermite_poly(mode.m, s * qy)
        * np.exp(-(w**2) * (qx**2 + qy**2) / 4.0)
    )
    if z != 0:
        out = out * np.exp(-1j * (mode.order + 1) * float(gouy_phase(geom, z)))
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# diagonal HG modes

@lru_cache(maxsize=8192)
def _poly_coefficient(n: int, m: int, k: int) -> int:
    # t^k coefficient of (1 - t)^n (1 + t)^m
    return sum((-1) ** i * math.comb(n, i) * math.comb(m, k - i) for i in range(max(0, k - m), min(n, k) + 1))


@lru_cache(maxsize=8192)
def dhg_coefficient(n: int, m: int, k: int) -> float:
    """Expansion weight b(n, m, k) of DHG_nm on HG_{n+m-k, k}."""
    if min(n, m, k) < 0:
        raise ValueError("indices must be nonnegative")
    N = n + m
    if k > N:
        raise ValueError(f"k = {k} exceeds the mode order {N}")
    c = _poly_coefficient(n, m, k)
    if c == 0:
        return 0.0
    if N <= _EXACT_FACTORIAL_MAX:
        sq = Fraction(c * c * math.factorial(N - k) * math.factorial(k), 2**N * math.factorial(n) * math.factorial(m))
        mag = math.sqrt(sq)
    else:
        log_sq = (
            2.0 * math.log(abs(c)) + log_factorial(N - k) + log_factorial(k)
            - N * math.log(2.0) - log_factorial(n) - log_factorial(m)
        )
        mag = math.exp(0.5 * log_sq)
    return math.copysign(mag, c)


def dhg_expand(mode) -> list[tuple[ModeIndex, float]]:
    """DHG_nm as a list of (HG_{N-k,k}, b(n,m,k)) for k = 0..N."""
    mode = as_mode(mode)
    N = mode.order
    return [(ModeIndex(N - k, k), dhg_coefficient(mode.n, mode.m, k)) for k in range(N + 1)]
