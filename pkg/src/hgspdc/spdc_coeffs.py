"""Two-photon HG amplitudes C^{nm}_{jkut} for a type-I degenerate SPDC source.

The signal photon carries HG_jk, the idler HG_ut, the pump HG_nm. With
N = j+u, M = k+t, alpha = N-n and beta = M-m, a coefficient is nonzero only
when alpha, beta >= 0 and both are even.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple

import mpmath

from .gaussian_modes import (
    BeamGeometry,
    ModeIndex,
    as_mode,
    dhg_coefficient,
    hermite_poly,
    log_factorial,
    normalization_C,
)

#: Global scale applied to the closed-form amplitude. Pinned by direct
#: quadrature of the defining overlap integral (see ``oracle.calibration_constant``).
CALIBRATION = 2.0

DEFAULT_MAX_ORDER = 6
MAX_ORDER_CEILING = 40
METHODS = ("exact", "thin", "oracle")


@dataclass(frozen=True)
class CrystalConfig:
    length: float
    pump_wavelength: float
    pump_waist: float

    def __post_init__(self):
        for name in ("length", "pump_wavelength", "pump_waist"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive length, got {v}")

    @property
    def pump_wavenumber(self) -> float:
        return 2.0 * math.pi / self.pump_wavelength

    @property
    def focusing_parameter(self) -> float:
        """A = L / (K w0p^2)."""
        return self.length / (self.pump_wavenumber * self.pump_waist**2)

    @property
    def downconverted_wavelength(self) -> float:
        return 2.0 * self.pump_wavelength

    @property
    def downconverted_waist(self) -> float:
        return math.sqrt(2.0) * self.pump_waist

    @property
    def pump_geometry(self) -> BeamGeometry:
        return BeamGeometry(self.pump_wavelength, self.pump_waist)

    @property
    def downconverted_geometry(self) -> BeamGeometry:
        return BeamGeometry(self.downconverted_wavelength, self.downconverted_waist)

    def describe(self) -> dict:
        return {
            "length_m": self.length,
            "pump_wavelength_m": self.pump_wavelength,
            "pump_waist_m": self.pump_waist,
            "focusing_parameter_A": self.focusing_parameter,
        }


#: lambda_p = 351 nm, L = 1 mm, w0p = 0.1 mm
REFERENCE_CONFIG = CrystalConfig(length=1e-3, pump_wavelength=351e-9, pump_waist=0.1e-3)


def param_A(config: CrystalConfig) -> float:
    return config.focusing_parameter


class CoeffKey(NamedTuple):
    j: int
    k: int
    u: int
    t: int

    @property
    def order(self) -> int:
        return self.j + self.k + self.u + self.t

    @property
    def signal(self) -> ModeIndex:
        return ModeIndex(self.j, self.k)

    @property
    def idler(self) -> ModeIndex:
        return ModeIndex(self.u, self.t)

    def swapped(self) -> "CoeffKey":
        return CoeffKey(self.u, self.t, self.j, self.k)

    def label(self) -> str:
        return f"{self.j}{self.k},{self.u}{self.t}"


@dataclass(frozen=True)
class PumpSpec:
    """Coherent superposition of HG pump modes, sum of |weight|^2 equal to 1."""

    components: tuple

    def __post_init__(self):
        comps = tuple((as_mode(md), complex(w)) for md, w in self.components)
        if not comps:
            raise ValueError("pump needs at least one component")
        modes = [md for md, _ in comps]
        if len(set(modes)) != len(modes):
            raise ValueError("pump components must use distinct modes")
        norm = math.fsum(abs(w) ** 2 for _, w in comps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"pump weights must satisfy sum |w|^2 = 1, got {norm!r}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def single(cls, n: int, m: int) -> "PumpSpec":
        return cls(((ModeIndex(n, m), 1.0),))

    @property
    def modes(self) -> list[ModeIndex]:
        return [md for md, _ in self.components]

    def is_single_mode(self) -> bool:
        return len(self.components) == 1

    def describe(self) -> str:
        return ";".join(f"{md.n},{md.m},{w.real:.12g},{w.imag:.12g}" for md, w in self.components)


# ---------------------------------------------------------------------------
# coefficient formulas

def conservation_allowed(pump_mode, key) -> bool:
    n, m = as_mode(pump_mode)
    j, k, u, t = key
    N, M = j + u, k + t
    return N >= n and M >= m and (N - n) % 2 == 0 and (M - m) % 2 == 0


def _sinc(x: float) -> float:
    return 1.0 if x == 0 else math.sin(x) / x


@lru_cache(maxsize=1024)
def phase_matching_sum(p: int, A: float) -> float:
    """sum_r binom(p, r) (-2/sqrt(1+A^2))^r sinc(r arctan A), r = 0..p.

    Terms grow like 3^p while the sum stays O(1), so it is evaluated with
    mpmath at a working precision that covers the cancellation.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    with mpmath.workdps(30 + p):
        a = mpmath.mpf(A)
        theta = mpmath.atan(a)
        c = -2 / mpmath.sqrt(1 + a * a)
        total = mpmath.mpf(1)
        for r in range(1, p + 1):
            total += mpmath.binomial(p, r) * c**r * mpmath.sin(r * theta) / (r * theta)
        return float(total)


def _log_radial_magnitude(alpha: int, beta: int) -> float:
    # log of sqrt(alpha! beta!) (1/2)^p / ((alpha/2)! (beta/2)!)
    p = (alpha + beta) // 2
    return (
        0.5 * (log_factorial(alpha) + log_factorial(beta))
        - p * math.log(2.0)
        - log_factorial(alpha // 2)
        - log_factorial(beta // 2)
    )


@lru_cache(maxsize=65536)
def radial_factor(alpha: int, beta: int, A: float) -> float:
    """Calibrated closed-form amplitude with the two DHG weights stripped off.

    CALIBRATION * sqrt(alpha! beta! / (A pi)) (1/2)^p arctan(A)
    / ((alpha/2)! (beta/2)!) * phase_matching_sum(p, A), with p = (alpha+beta)/2.
    Zero unless alpha and beta are both even and nonnegative.
    """
    if alpha < 0 or beta < 0 or alpha % 2 or beta % 2:
        return 0.0
    p = (alpha + beta) // 2
    if alpha <= 20 and beta <= 20:
        mag = (
            math.sqrt(math.factorial(alpha) * math.factorial(beta))
            * 0.5**p
            / (math.factorial(alpha // 2) * math.factorial(beta // 2))
        )
    else:
        mag = math.exp(_log_radial_magnitude(alpha, beta))
    value = CALIBRATION * mag * math.atan(A) / math.sqrt(A * math.pi) * phase_matching_sum(p, A)
    if not math.isfinite(value):
        raise OverflowError(f"coefficient for alpha={alpha}, beta={beta} is not representable")
    return value


def _dhg_weights(pump_mode: ModeIndex, key) -> tuple[int, int, float]:
    j, k, u, t = key
    alpha = j + u - pump_mode.n
    beta = k + t - pump_mode.m
    return alpha, beta, dhg_coefficient(j, u, alpha) * dhg_coefficient(k, t, beta)


def coeff_exact(config: CrystalConfig, pump_mode, key) -> float:
    pump_mode = as_mode(pump_mode)
    if not conservation_allowed(pump_mode, key):
        return 0.0
    alpha, beta, bb = _dhg_weights(pump_mode, key)
    if bb == 0.0:
        return 0.0
    return bb * radial_factor(alpha, beta, config.focusing_parameter)


@lru_cache(maxsize=4096)
def _origin_value(alpha: int, beta: int) -> float:
    # w0 * HG_{alpha,beta}(0, 0, 0): the waist-free origin value of the mode
    return normalization_C(ModeIndex(alpha, beta)) * hermite_poly(alpha, 0.0) * hermite_poly(beta, 0.0)


def coeff_thin(config: CrystalConfig, pump_mode, key) -> float:
    """Thin-crystal amplitude, the sinc -> 1 limit of ``coeff_exact``.

    CALIBRATION * sqrt(A/2) * b(j,u,alpha) b(k,t,beta) * w0 HG_{alpha,beta}(0,0,0).
    """
    pump_mode = as_mode(pump_mode)
    if not conservation_allowed(pump_mode, key):
        return 0.0
    alpha, beta, bb = _dhg_weights(pump_mode, key)
    A = config.focusing_parameter
    return CALIBRATION * math.sqrt(A / 2.0) * bb * _origin_value(alpha, beta)


def _coeff_oracle(config, pump_mode, key):
    from .oracle import coeff_quadrature_2d

    if not conservation_allowed(pump_mode, key):
        return 0.0
    return coeff_quadrature_2d(config, pump_mode, key).value


_COEFF_FUNCS: dict[str, Callable] = {"exact": coeff_exact, "thin": coeff_thin, "oracle": _coeff_oracle}


def coefficient(config: CrystalConfig, pump_mode, key, method: str = "exact") -> float:
    try:
        fn = _COEFF_FUNCS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}") from None
    return fn(config, as_mode(pump_mode), CoeffKey(*key))


# ---------------------------------------------------------------------------
# truncated states

def iter_keys(max_order: int) -> Iterable[CoeffKey]:
    """All (j, k, u, t) with j+k+u+t <= max_order, lexicographic."""
    for j in range(max_order + 1):
        for k in range(max_order + 1 - j):
            for u in range(max_order + 1 - j - k):
                for t in range(max_order + 1 - j - k - u):
                    yield CoeffKey(j, k, u, t)


def thread_count() -> int:
    raw = os.environ.get("HGSPDC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"HGSPDC_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


@dataclass(frozen=True)
class TwoPhotonAmplitudes:
    pump: PumpSpec
    config: CrystalConfig
    max_order: int
    method: str
    amplitudes: dict = field(repr=False)

    def __post_init__(self):
        amps = {CoeffKey(*key): complex(a) for key, a in sorted(self.amplitudes.items())}
        for key, a in amps.items():
            if not (math.isfinite(a.real) and math.isfinite(a.imag)):
                raise OverflowError(f"amplitude for {key} is not finite")
        object.__setattr__(self, "amplitudes", amps)

    def __len__(self):
        return len(self.amplitudes)

    def __iter__(self):
        return iter(self.amplitudes)

    def __getitem__(self, key) -> complex:
        return self.amplitudes.get(CoeffKey(*key), 0j)

    def items(self):
        return self.amplitudes.items()

    def keys(self):
        return self.amplitudes.keys()

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.amplitudes.values())

    def is_normalized(self, tol: float = 1e-10) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def normalized(self) -> "TwoPhotonAmplitudes":
        norm = math.sqrt(self.norm_squared())
        if norm == 0.0:
            raise ZeroDivisionError("cannot normalize a state with no weight")
        return self.replace({key: a / norm for key, a in self.amplitudes.items()})

    def replace(self, amplitudes: dict) -> "TwoPhotonAmplitudes":
        return TwoPhotonAmplitudes(self.pump, self.config, self.max_order, self.method, amplitudes)


def _sweep(config, pump: PumpSpec, keys: list, method: str) -> list:
    fn = _COEFF_FUNCS[method]
    out = []
    for key in keys:
        allowed = False
        amp = 0j
        for mode, weight in pump.components:
            if conservation_allowed(mode, key):
                allowed = True
                if weight != 0:
                    amp += weight * fn(config, mode, key)
        if allowed:
            out.append((key, amp))
    return out


def build_state(
    config: CrystalConfig,
    pump: PumpSpec,
    max_order: int = DEFAULT_MAX_ORDER,
    method: str = "exact",
    ceiling: int = MAX_ORDER_CEILING,
) -> TwoPhotonAmplitudes:
    """Raw (unnormalized) amplitudes for every allowed key up to ``max_order``.

    Keys forbidden for every pump component are left out. The sweep is split
    into contiguous chunks when HGSPDC_THREADS > 1; chunks are reassembled in
    key order so the result does not depend on the thread count.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")
    if max_order > ceiling:
        raise ValueError(f"max_order {max_order} exceeds the ceiling {ceiling}")
    if method == "oracle" and max_order > 8:
        raise ValueError("the quadrature method is limited to max_order <= 8")
    keys = list(iter_keys(max_order))
    nthreads = thread_count()
    if nthreads == 1 or len(keys) < 64:
        rows = _sweep(config, pump, keys, method)
    else:
        size = -(-len(keys) // nthreads)
        chunks = [keys[i : i + size] for i in range(0, len(keys), size)]
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            parts = list(pool.map(lambda ch: _sweep(config, pump, ch, method), chunks))
        rows = [row for part in parts for row in part]
    return TwoPhotonAmplitudes(pump, config, max_order, method, dict(rows))


def total_probability(state: TwoPhotonAmplitudes, up_to_order: int) -> float:
    if up_to_order < 0:
        raise ValueError("up_to_order must be nonnegative")
    if up_to_order > state.max_order:
        raise ValueError(f"state is truncated at order {state.max_order}, asked for {up_to_order}")
    return math.fsum(abs(a) ** 2 for key, a in state.items() if key.order <= up_to_order)


def cumulative_probabilities(state: TwoPhotonAmplitudes) -> list[float]:
    """Total probability up to each order 0..max_order."""
    per_order = [[] for _ in range(state.max_order + 1)]
    for key, a in state.items():
        per_order[key.order].append(abs(a) ** 2)
    out, running = [], []
    for terms in per_order:
        running.extend(terms)
        out.append(math.fsum(running))
    return out


def exchange_symmetry_check(state: TwoPhotonAmplitudes, tol: float = 1e-12) -> bool:
    if not state.pump.is_single_mode():
        raise ValueError("exchange symmetry is defined for single-mode pumps")
    return all(abs(a - state[key.swapped()]) <= tol for key, a in state.items())
