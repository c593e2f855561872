"""First-order HG two-photon states and the optics that act on them.

A :class:`FirstOrderState` is a 2x2 amplitude matrix ``M[s, i]`` over the
ordered basis (HG01, HG10) for the signal (rows) and idler (columns).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entanglement import first_order, postselect
from .gaussian_modes import ModeIndex
from .spdc_coeffs import REFERENCE_CONFIG, CrystalConfig, PumpSpec, build_state

BASIS = (ModeIndex(0, 1), ModeIndex(1, 0))
_NORM_TOL = 1e-12

_S = 1.0 / math.sqrt(2.0)
BELL_STATES = {
    "phi+": np.array([[_S, 0], [0, _S]], dtype=complex),
    "phi-": np.array([[_S, 0], [0, -_S]], dtype=complex),
    "psi+": np.array([[0, _S], [_S, 0]], dtype=complex),
    "psi-": np.array([[0, _S], [-_S, 0]], dtype=complex),
}
SOURCES = ("HG00_pump", "HG11_pump")


@dataclass(frozen=True)
class FirstOrderState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2, 2):
            raise ValueError("first-order state needs a 2x2 amplitude matrix")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state is not normalized (sum |a|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_two_photon(cls, state) -> "FirstOrderState":
        """Post-select the first-order block of a two-photon state."""
        sel = postselect(state, first_order)
        index = {md: i for i, md in enumerate(BASIS)}
        amps = np.zeros((2, 2), dtype=complex)
        for key, a in sel.items():
            amps[index[key.signal], index[key.idler]] = a
        return cls(amps)

    def amplitude(self, signal, idler) -> complex:
        return complex(self.amplitudes[BASIS.index(ModeIndex(*signal)), BASIS.index(ModeIndex(*idler))])

    def reduced_density(self) -> np.ndarray:
        M = self.amplitudes
        return M @ M.conj().T

    def reduced_eigenvalues(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.reduced_density()), 0.0, None)

    def purity(self) -> float:
        return float(np.sum(np.abs(self.reduced_density()) ** 2))

    def fidelity(self, other) -> float:
        """|<other|self>|^2, insensitive to global phase."""
        target = other.amplitudes if isinstance(other, FirstOrderState) else np.asarray(other)
        return float(abs(np.vdot(target, self.amplitudes)) ** 2)

    def rows(self):
        for s, sm in enumerate(BASIS):
            for i, im in enumerate(BASIS):
                yield sm, im, complex(self.amplitudes[s, i])


@dataclass(frozen=True)
class FirstOrderElement:
    kind: str
    matrix: np.ndarray
    angle: float | None = None

    def __str__(self):
        if self.kind == "dove":
            return f"dove({math.degrees(self.angle):g}°)"
        return self.kind


def dove_prism(phi: float) -> FirstOrderElement:
    """Dove prism with its axis at ``phi``, modelled as an image reflection.

    On (HG01, HG10) the matrix is [[cos 2phi, sin 2phi], [sin 2phi, -cos 2phi]]:
    45 degrees swaps HG01 and HG10, 90 degrees sends HG01 -> -HG01.
    """
    c, s = math.cos(2 * phi), math.sin(2 * phi)
    # exact zeros at multiples of 45 degrees
    c = 0.0 if abs(c) < 1e-15 else c
    s = 0.0 if abs(s) < 1e-15 else s
    return FirstOrderElement("dove", np.array([[c, s], [s, -c]], dtype=complex), phi)


def mirror() -> FirstOrderElement:
    """HG10 -> HG10, HG01 -> -HG01."""
    return FirstOrderElement("mirror", np.array([[-1, 0], [0, 1]], dtype=complex))


def identity() -> FirstOrderElement:
    return FirstOrderElement("identity", np.eye(2, dtype=complex))


def apply(state: FirstOrderState, element: FirstOrderElement, arm: str) -> FirstOrderState:
    U = element.matrix
    if arm == "signal":
        return FirstOrderState(U @ state.amplitudes)
    if arm == "idler":
        return FirstOrderState(state.amplitudes @ U.T)
    raise ValueError(f"arm must be 'signal' or 'idler', got {arm!r}")


def source_state(source: str, config: CrystalConfig = REFERENCE_CONFIG) -> FirstOrderState:
    """First-order post-selected output for an HG00 or HG11 pump."""
    modes = {"HG00_pump": (0, 0), "HG11_pump": (1, 1)}
    if source not in modes:
        raise ValueError(f"source must be one of {SOURCES}, got {source!r}")
    st = build_state(config, PumpSpec.single(*modes[source]), max_order=2)
    return FirstOrderState.from_two_photon(st)


# element sequences, all on the signal arm
_DOVE45 = dove_prism(math.pi / 4)
_RECIPES = {
    "HG00_pump": {"phi+": [], "psi+": [_DOVE45], "phi-": [mirror()], "psi-": [_DOVE45, mirror()]},
    "HG11_pump": {"psi+": [], "phi+": [_DOVE45], "psi-": [mirror()], "phi-": [_DOVE45, mirror()]},
}


@dataclass(frozen=True)
class BellRecipe:
    target: str
    source: str
    pipeline: tuple
    state: FirstOrderState

    def describe(self) -> str:
        if not self.pipeline:
            return "no optics"
        return "; ".join(f"{el} on {arm}" for el, arm in self.pipeline)

    def fidelity(self) -> float:
        return self.state.fidelity(BELL_STATES[self.target])


def bell_recipe(target: str, source: str = "HG00_pump", config: CrystalConfig = REFERENCE_CONFIG) -> BellRecipe:
    if target not in BELL_STATES:
        raise ValueError(f"target must be one of {sorted(BELL_STATES)}, got {target!r}")
    state = source_state(source, config)
    pipeline = tuple((el, "signal") for el in _RECIPES[source][target])
    for el, arm in pipeline:
        state = apply(state, el, arm)
    return BellRecipe(target, source, pipeline, state)


def nonmax_target(theta: float, phi: float) -> FirstOrderState:
    """cos(theta) |01,01> + exp(i phi) sin(theta) |10,10>."""
    return FirstOrderState(np.array([[math.cos(theta), 0], [0, np.exp(1j * phi) * math.sin(theta)]]))


def nonmax_pump(theta: float, phi: float) -> PumpSpec:
    return PumpSpec(((ModeIndex(0, 2), math.cos(theta)), (ModeIndex(2, 0), np.exp(1j * phi) * math.sin(theta))))


def nonmax_pipeline(theta: float, phi: float, config: CrystalConfig = REFERENCE_CONFIG) -> FirstOrderState:
    """Pump cos(theta) V02 + exp(i phi) sin(theta) V20, down-convert, keep
    the first-order block."""
    st = build_state(config, nonmax_pump(theta, phi), max_order=2)
    return FirstOrderState.from_two_photon(st)
