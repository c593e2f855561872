"""Brute-force quadrature of the overlap integrals that define the two-photon
HG amplitudes. Independent of the closed forms in ``spdc_coeffs``; only the
mode functions from ``gaussian_modes`` are shared.

The default scheme is a tensor Gauss-Hermite rule whose weight is the exact
Gaussian envelope of the integrand (via a Cholesky change of variables), so
what is left to integrate is a polynomial times the smooth phase-matching sinc.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss

from .gaussian_modes import BeamGeometry, ModeIndex, angular_spectrum, as_mode, dhg_coefficient
from .spdc_coeffs import CALIBRATION, CoeffKey, CrystalConfig, coeff_exact, conservation_allowed, thread_count

SCHEMES = ("tensor_gauss_hermite", "adaptive_cartesian")
MAX_KEY_ORDER = 8
_ABS_TOL = 1e-12
_EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "tensor_gauss_hermite"
    points_per_axis: int = 16
    #: box half-width in units of the integrand's Gaussian 1/w (adaptive_cartesian only)
    domain_halfwidth: float = 12.0
    target_rel_error: float = 1e-8

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.points_per_axis < 8:
            raise ValueError("points_per_axis must be at least 8")
        if not self.target_rel_error > 0:
            raise ValueError("target_rel_error must be positive")
        if not self.domain_halfwidth > 0:
            raise ValueError("domain_halfwidth must be positive")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    est_error: float
    evaluations: int


def sinc(x):
    """sin(x)/x with sinc(0) = 1 exactly."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.sin(x[nz]) / x[nz]
    return out


@lru_cache(maxsize=64)
def _hermgauss(n):
    return hermgauss(n)


@lru_cache(maxsize=64)
def _leggauss(n):
    return leggauss(n)


def _tensor_sum(nodes, weights, d, func):
    """Sum of prod(weights) * func(points) over the d-fold tensor grid.

    Evaluated one slab of the leading axis at a time to bound memory.
    Returns (sum, sum of absolute terms, evaluation count).
    """
    n = len(nodes)
    rest = np.stack(np.meshgrid(*([nodes] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1)
    w_grid = np.array(1.0)
    for _ in range(d - 1):
        w_grid = np.multiply.outer(w_grid, weights)
    w_rest = w_grid.reshape(-1)
    total = 0j
    abs_total = 0.0
    for i in range(n):
        pts = np.concatenate([np.full((len(rest), 1), nodes[i]), rest], axis=1)
        terms = weights[i] * w_rest * func(pts)
        total += terms.sum()
        abs_total += np.abs(terms).sum()
    return total, abs_total, n**d


def _gh_integral(integrand, envelope, n):
    """Integral of integrand(x) over R^d, envelope = exp(-x^T M x) with M given.

    The integrand must include the envelope; it is divided back out at the
    nodes, which stays within double range for the node counts used here.
    """
    M = np.asarray(envelope, dtype=float)
    d = M.shape[0]
    chol = np.linalg.cholesky(M)
    T = np.linalg.inv(chol.T)
    jac = abs(np.linalg.det(T))
    y, w = _hermgauss(n)

    def func(ypts):
        x = ypts @ T.T
        return integrand(x) * np.exp(np.sum(ypts**2, axis=-1))

    total, abs_total, count = _tensor_sum(y, w, d, func)
    return total * jac, abs_total * jac, count


def _gl_integral(integrand, d, halfwidth, n):
    x, w = _leggauss(n)
    x = x * halfwidth
    w = w * halfwidth
    return _tensor_sum(x, w, d, integrand)


def _integrate(integrand, envelope, spec: QuadratureSpec) -> tuple[complex, float, int]:
    envelope = np.asarray(envelope)
    d = envelope.shape[0]
    if spec.scheme == "tensor_gauss_hermite":
        n = spec.points_per_axis
        fine, abs_fine, c1 = _gh_integral(integrand, envelope, n)
        coarse, _, c2 = _gh_integral(integrand, envelope, n // 2)
        est = max(abs(fine - coarse), 64 * _EPS * abs_fine)
        return fine, est, c1 + c2
    # adaptive_cartesian: Gauss-Legendre on a box, doubled until two levels agree.
    # The box unit is 1/w of the envelope exp(-w^2 q^2 / 4) along its slowest
    # direction (1/w0c for the 4D integrand, 1/w0p for the relative P-plane).
    length_scale = 1.0 / (2.0 * math.sqrt(np.linalg.eigvalsh(envelope).min()))
    h = spec.domain_halfwidth * length_scale
    n = spec.points_per_axis
    prev, _, count = _gl_integral(integrand, d, h, n)
    for _ in range(4):
        n *= 2
        cur, abs_cur, c = _gl_integral(integrand, d, h, n)
        count += c
        est = max(abs(cur - prev), 64 * _EPS * abs_cur)
        if est <= max(spec.target_rel_error * abs(cur), _ABS_TOL) or n**d > 4_000_000:
            return cur, est, count
        prev = cur
    return cur, est, count


def _finish(value: complex, est: float, count: int, spec: QuadratureSpec, what: str) -> QuadratureResult:
    est = max(est, abs(value.imag))
    re = float(value.real)
    if est > max(spec.target_rel_error * abs(re), _ABS_TOL):
        raise ConvergenceError(
            f"{what}: refinement levels disagree by {est:.3e} (value {re:.6e}, target {spec.target_rel_error:.1e})"
        )
    return QuadratureResult(re, float(est), int(count))


def _check_key(key) -> CoeffKey:
    key = CoeffKey(*key)
    if min(key) < 0:
        raise ValueError("key indices must be nonnegative")
    if key.order > MAX_KEY_ORDER:
        raise ValueError(f"quadrature is limited to key order <= {MAX_KEY_ORDER}, got {key.order}")
    return key


def coeff_quadrature_4d(config: CrystalConfig, pump_mode, key, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """C^{nm}_{jkut} by direct 4D integration over the signal and idler q-planes."""
    spec = spec or QuadratureSpec()
    key = _check_key(key)
    pump_mode = as_mode(pump_mode)
    pg, cg = config.pump_geometry, config.downconverted_geometry
    K, L = config.pump_wavenumber, config.length
    pref = math.sqrt(2.0 * L / K) / math.pi
    signal, idler = key.signal, key.idler

    def integrand(x):
        # columns: qs_x, qi_x, qs_y, qi_y
        qsx, qix, qsy, qiy = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
        dq2 = (qsx - qix) ** 2 + (qsy - qiy) ** 2
        return (
            pref
            * np.conj(angular_spectrum(signal, cg, qsx, qsy))
            * np.conj(angular_spectrum(idler, cg, qix, qiy))
            * angular_spectrum(pump_mode, pg, qsx + qix, qsy + qiy)
            * sinc(L * dq2 / (4.0 * K))
        )

    wc2, wp2 = cg.waist**2, pg.waist**2
    block = np.array([[wc2 + wp2, wp2], [wp2, wc2 + wp2]]) / 4.0
    envelope = np.zeros((4, 4))
    envelope[:2, :2] = block
    envelope[2:, 2:] = block
    value, est, count = _integrate(integrand, envelope, spec)
    return _finish(value, est, count, spec, f"4D quadrature of {key}")


def coeff_quadrature_2d(config: CrystalConfig, pump_mode, key, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """C^{nm}_{jkut} from the single P-plane integral left after the
    centre-of-momentum integral collapses by orthonormality."""
    spec = spec or QuadratureSpec()
    key = _check_key(key)
    pump_mode = as_mode(pump_mode)
    j, k, u, t = key
    alpha, beta = j + u - pump_mode.n, k + t - pump_mode.m
    if alpha < 0 or beta < 0:
        return QuadratureResult(0.0, 0.0, 0)
    pg = config.pump_geometry
    K, L = config.pump_wavenumber, config.length
    weight = (-1) ** (alpha + beta) * dhg_coefficient(j, u, alpha) * dhg_coefficient(k, t, beta)
    pref = math.sqrt(L / (2.0 * K)) / math.pi * weight
    relative = ModeIndex(alpha, beta)

    def integrand(x):
        px, py = x[:, 0], x[:, 1]
        return pref * np.conj(angular_spectrum(relative, pg, px, py)) * sinc(L * (px**2 + py**2) / (4.0 * K))

    envelope = np.eye(2) * pg.waist**2 / 4.0
    value, est, count = _integrate(integrand, envelope, spec)
    return _finish(value, est, count, spec, f"2D quadrature of {key}")


def overlap_quadrature(mode_a, mode_b, geom: BeamGeometry, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Integral of conj(v_a) v_b over the q-plane at z = 0."""
    spec = spec or QuadratureSpec()
    mode_a, mode_b = as_mode(mode_a), as_mode(mode_b)

    def integrand(x):
        qx, qy = x[:, 0], x[:, 1]
        return np.conj(angular_spectrum(mode_a, geom, qx, qy)) * angular_spectrum(mode_b, geom, qx, qy)

    envelope = np.eye(2) * geom.waist**2 / 2.0
    value, est, count = _integrate(integrand, envelope, spec)
    return _finish(value, est, count, spec, f"overlap <{mode_a}|{mode_b}>")


# ---------------------------------------------------------------------------

def calibration_constant(config: CrystalConfig, pump_mode=(0, 0), keys=None, spec: QuadratureSpec | None = None) -> float:
    """Ratio of the 4D quadrature to the uncalibrated closed form.

    Averaged over the given allowed keys (default: the allowed keys of
    order <= 2 for the pump). The library constant ``CALIBRATION`` is checked
    against this in the test suite.
    """
    pump_mode = as_mode(pump_mode)
    if keys is None:
        from .spdc_coeffs import iter_keys

        keys = [k for k in iter_keys(pump_mode.order + 2) if conservation_allowed(pump_mode, k)]
    ratios = []
    for key in keys:
        closed = coeff_exact(config, pump_mode, key) / CALIBRATION
        if closed == 0.0:
            continue
        ratios.append(coeff_quadrature_4d(config, pump_mode, key, spec).value / closed)
    if not ratios:
        raise ValueError("no key with a nonzero closed-form amplitude")
    return math.fsum(ratios) / len(ratios)


@dataclass(frozen=True)
class ComparisonRow:
    key: CoeffKey
    closed_form: float
    quadrature: float
    est_error: float

    @property
    def rel_diff(self) -> float:
        """Relative difference; absolute when the closed form is zero."""
        scale = abs(self.closed_form)
        diff = abs(self.quadrature - self.closed_form)
        return diff / scale if scale > 0 else diff


def compare_closed_form(
    config: CrystalConfig,
    pump_mode,
    max_order: int,
    spec: QuadratureSpec | None = None,
    route: str = "4d",
    include_forbidden: bool = False,
) -> list[ComparisonRow]:
    """Closed form against quadrature for every key up to ``max_order``."""
    from .spdc_coeffs import iter_keys

    if route not in ("2d", "4d"):
        raise ValueError("route must be '2d' or '4d'")
    pump_mode = as_mode(pump_mode)
    quad = coeff_quadrature_4d if route == "4d" else coeff_quadrature_2d
    keys = [k for k in iter_keys(max_order) if include_forbidden or conservation_allowed(pump_mode, k)]

    def row(key):
        res = quad(config, pump_mode, key, spec)
        return ComparisonRow(key, coeff_exact(config, pump_mode, key), res.value, res.est_error)

    nthreads = thread_count()
    if nthreads == 1:
        return [row(k) for k in keys]
    with ThreadPoolExecutor(max_workers=nthreads) as pool:
        return list(pool.map(row, keys))
